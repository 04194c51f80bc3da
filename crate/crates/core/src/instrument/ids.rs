use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::InstrumentError;

/// Language-neutral item token, e.g. `apple_red` or `basket_yellow`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ItemId(String);

impl ItemId {
    pub fn new(token: impl Into<String>) -> Result<Self, InstrumentError> {
        let token = token.into();
        let valid = !token.is_empty()
            && token.len() <= 48
            && token.starts_with(|c: char| c.is_ascii_lowercase())
            && token
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
        if valid {
            Ok(Self(token))
        } else {
            Err(InstrumentError::InvalidItemToken(token))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for ItemId {
    type Error = InstrumentError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<ItemId> for String {
    fn from(value: ItemId) -> Self {
        value.0
    }
}

impl FromStr for ItemId {
    type Err = InstrumentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One of the four question screens shown after every level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Question {
    Q1,
    Q2,
    Q3,
    Q4,
}

impl Question {
    pub const ALL: [Question; 4] = [Question::Q1, Question::Q2, Question::Q3, Question::Q4];

    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_number(n: u8) -> Result<Self, InstrumentError> {
        match n {
            1 => Ok(Question::Q1),
            2 => Ok(Question::Q2),
            3 => Ok(Question::Q3),
            4 => Ok(Question::Q4),
            _ => Err(InstrumentError::QuestionOutOfRange(n)),
        }
    }

    /// Q1/Q2 ask for single items, Q3 for "is changing into" pairs, Q4 for collisions.
    pub fn kind(self) -> QuestionKind {
        match self {
            Question::Q1 | Question::Q2 => QuestionKind::ItemSelection,
            Question::Q3 => QuestionKind::OrderedPairSelection,
            Question::Q4 => QuestionKind::UnorderedPairSelection,
        }
    }

    pub fn next(self) -> Option<Question> {
        match self {
            Question::Q1 => Some(Question::Q2),
            Question::Q2 => Some(Question::Q3),
            Question::Q3 => Some(Question::Q4),
            Question::Q4 => None,
        }
    }
}

impl fmt::Display for Question {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}", self.number())
    }
}

impl FromStr for Question {
    type Err = InstrumentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s.strip_prefix(['Q', 'q']).unwrap_or(s);
        let n: u8 = digits
            .parse()
            .map_err(|_| InstrumentError::InvalidQuestion(s.to_owned()))?;
        Self::from_number(n)
    }
}

/// Game level, 1 through 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Level(u8);

impl Level {
    pub const ALL: [Level; 3] = [Level(1), Level(2), Level(3)];

    pub fn new(n: u8) -> Result<Self, InstrumentError> {
        if (1..=3).contains(&n) {
            Ok(Level(n))
        } else {
            Err(InstrumentError::LevelOutOfRange(n))
        }
    }

    pub fn number(self) -> u8 {
        self.0
    }

    pub fn next(self) -> Option<Level> {
        Level::new(self.0 + 1).ok()
    }
}

impl TryFrom<u8> for Level {
    type Error = InstrumentError;
    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Level::new(value)
    }
}

impl From<Level> for u8 {
    fn from(value: Level) -> Self {
        value.0
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.0)
    }
}

/// A (question, level) position in the 4 x 3 assessment grid.
///
/// Ordering follows the play order: all four questions of level 1, then level 2, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub level: Level,
    pub question: Question,
}

impl Cell {
    pub fn new(question: Question, level: Level) -> Self {
        Self { level, question }
    }

    /// All twelve cells in play order.
    pub fn all() -> impl Iterator<Item = Cell> {
        Level::ALL
            .into_iter()
            .flat_map(|level| Question::ALL.into_iter().map(move |q| Cell::new(q, level)))
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.question, self.level)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionKind {
    ItemSelection,
    OrderedPairSelection,
    UnorderedPairSelection,
}

impl QuestionKind {
    pub fn is_pair(self) -> bool {
        !matches!(self, QuestionKind::ItemSelection)
    }
}

/// Two items related by a question: "is changing into" (ordered) or "collides with" (unordered).
///
/// Unordered pairs are stored with lexicographically sorted ids so equality ignores order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemPair {
    first: ItemId,
    second: ItemId,
    ordered: bool,
}

impl ItemPair {
    pub fn new(first: ItemId, second: ItemId, ordered: bool) -> Result<Self, InstrumentError> {
        if first == second {
            return Err(InstrumentError::SelfPair(first));
        }
        let (first, second) = if !ordered && second < first {
            (second, first)
        } else {
            (first, second)
        };
        Ok(Self {
            first,
            second,
            ordered,
        })
    }

    pub fn ordered(first: &str, second: &str) -> Result<Self, InstrumentError> {
        Self::new(first.parse()?, second.parse()?, true)
    }

    pub fn unordered(first: &str, second: &str) -> Result<Self, InstrumentError> {
        Self::new(first.parse()?, second.parse()?, false)
    }

    pub fn first(&self) -> &ItemId {
        &self.first
    }

    pub fn second(&self) -> &ItemId {
        &self.second
    }

    pub fn is_ordered(&self) -> bool {
        self.ordered
    }
}

impl fmt::Display for ItemPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let joiner = if self.ordered { "->" } else { "+" };
        write!(f, "{}{}{}", self.first, joiner, self.second)
    }
}

/// Wire form of a choice: a bare item token or a two-element array.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawChoice {
    Item(ItemId),
    Pair([ItemId; 2]),
}

/// A single selectable element on a question screen.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Choice {
    Item(ItemId),
    Pair(ItemPair),
}

impl Choice {
    /// Interprets a wire choice under the given question kind.
    pub fn from_raw(raw: RawChoice, kind: QuestionKind) -> Result<Self, InstrumentError> {
        match (raw, kind) {
            (RawChoice::Item(id), QuestionKind::ItemSelection) => Ok(Choice::Item(id)),
            (RawChoice::Pair([a, b]), QuestionKind::OrderedPairSelection) => {
                Ok(Choice::Pair(ItemPair::new(a, b, true)?))
            }
            (RawChoice::Pair([a, b]), QuestionKind::UnorderedPairSelection) => {
                Ok(Choice::Pair(ItemPair::new(a, b, false)?))
            }
            (raw, kind) => Err(InstrumentError::ChoiceKind {
                choice: format!("{raw:?}"),
                kind,
            }),
        }
    }

    pub fn to_raw(&self) -> RawChoice {
        match self {
            Choice::Item(id) => RawChoice::Item(id.clone()),
            Choice::Pair(p) => RawChoice::Pair([p.first.clone(), p.second.clone()]),
        }
    }

    pub fn kind_matches(&self, kind: QuestionKind) -> bool {
        match (self, kind) {
            (Choice::Item(_), QuestionKind::ItemSelection) => true,
            (Choice::Pair(p), QuestionKind::OrderedPairSelection) => p.ordered,
            (Choice::Pair(p), QuestionKind::UnorderedPairSelection) => !p.ordered,
            _ => false,
        }
    }

    /// Item ids referenced by this choice.
    pub fn items(&self) -> impl Iterator<Item = &ItemId> {
        let (a, b) = match self {
            Choice::Item(id) => (id, None),
            Choice::Pair(p) => (&p.first, Some(&p.second)),
        };
        std::iter::once(a).chain(b)
    }
}

/// Serialized in its wire form; reading one back needs the question kind, see [`Choice::from_raw`].
impl Serialize for Choice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_raw().serialize(s)
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Choice::Item(id) => id.fmt(f),
            Choice::Pair(p) => p.fmt(f),
        }
    }
}
