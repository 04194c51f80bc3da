use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::SessionId;
use crate::instrument::GradeRange;

pub const AGE_RANGE: std::ops::RangeInclusive<u8> = 5..=25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Female,
    Male,
    Other,
    Undisclosed,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ProfileError {
    #[error("grade {grade} outside {min}..={max}")]
    GradeOutOfRange { grade: u8, min: u8, max: u8 },
    #[error("age {0} outside 5..=25")]
    AgeOutOfRange(u8),
    #[error("invalid language tag {0:?}")]
    InvalidLanguage(String),
}

/// IETF language tag such as `de`, `en-GB` or `gsw-CH`. Only the shape is checked.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LanguageTag(String);

impl LanguageTag {
    pub fn new(tag: impl Into<String>) -> Result<Self, ProfileError> {
        let tag = tag.into();
        let mut parts = tag.split('-');
        let primary_ok = parts
            .next()
            .is_some_and(|p| (2..=3).contains(&p.len()) && p.chars().all(|c| c.is_ascii_alphabetic()));
        let rest_ok = parts.all(|p| (1..=8).contains(&p.len()) && p.chars().all(|c| c.is_ascii_alphanumeric()));
        if primary_ok && rest_ok {
            Ok(Self(tag))
        } else {
            Err(ProfileError::InvalidLanguage(tag))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for LanguageTag {
    type Error = ProfileError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<LanguageTag> for String {
    fn from(value: LanguageTag) -> Self {
        value.0
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Demographics collected on the entry screen. No names or free text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudentProfile {
    pub session_id: SessionId,
    pub age: u8,
    pub grade: u8,
    pub gender: Gender,
    pub language: LanguageTag,
}

/// Profile as submitted by a client; the session id is optional and generated when absent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewProfile {
    #[serde(default)]
    pub session_id: Option<SessionId>,
    pub age: u8,
    pub grade: u8,
    pub gender: Gender,
    pub language: LanguageTag,
}

impl NewProfile {
    pub fn new(age: u8, grade: u8, gender: Gender, language: &str) -> Result<Self, ProfileError> {
        Ok(Self {
            session_id: None,
            age,
            grade,
            gender,
            language: LanguageTag::new(language)?,
        })
    }

    pub fn with_id(mut self, id: SessionId) -> Self {
        self.session_id = Some(id);
        self
    }

    pub fn validate(&self, grades: GradeRange) -> Result<(), ProfileError> {
        if !grades.contains(self.grade) {
            return Err(ProfileError::GradeOutOfRange {
                grade: self.grade,
                min: grades.min,
                max: grades.max,
            });
        }
        if !AGE_RANGE.contains(&self.age) {
            return Err(ProfileError::AgeOutOfRange(self.age));
        }
        Ok(())
    }

    pub(crate) fn into_profile(self, session_id: SessionId) -> StudentProfile {
        StudentProfile {
            session_id,
            age: self.age,
            grade: self.grade,
            gender: self.gender,
            language: self.language,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GRADES: GradeRange = GradeRange { min: 4, max: 9 };

    #[test]
    fn language_tags() {
        for ok in ["de", "en-GB", "gsw-CH", "zh-Hant-TW"] {
            assert!(LanguageTag::new(ok).is_ok(), "{ok}");
        }
        for bad in ["", "d", "deutsch", "en_GB", "en--GB"] {
            assert!(LanguageTag::new(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn grade_and_age_bounds() {
        let p = NewProfile::new(10, 4, Gender::Female, "de").unwrap();
        assert!(p.validate(GRADES).is_ok());
        let p = NewProfile::new(10, 13, Gender::Female, "de").unwrap();
        assert_eq!(
            p.validate(GRADES),
            Err(ProfileError::GradeOutOfRange { grade: 13, min: 4, max: 9 })
        );
        let p = NewProfile::new(3, 4, Gender::Male, "de").unwrap();
        assert_eq!(p.validate(GRADES), Err(ProfileError::AgeOutOfRange(3)));
    }
}
