//! Millisecond-precision UTC timestamps as they appear in logs and exports.

use chrono::{DateTime, SubsecRound, TimeZone, Utc};
use serde::{Deserialize, Deserializer, Serializer};

pub type Timestamp = DateTime<Utc>;

const FORMAT: &str = "%Y-%m-%dT%H:%M:%S%.3fZ";

/// Current wall-clock time truncated to milliseconds.
pub fn now_ms() -> Timestamp {
    Utc::now().trunc_subsecs(3)
}

pub fn truncate_ms(at: Timestamp) -> Timestamp {
    at.trunc_subsecs(3)
}

pub fn format(at: &Timestamp) -> String {
    at.format(FORMAT).to_string()
}

pub fn parse(text: &str) -> Result<Timestamp, chrono::ParseError> {
    let parsed = DateTime::parse_from_rfc3339(text)?;
    Ok(truncate_ms(parsed.with_timezone(&Utc)))
}

/// Fixed reference instant used by fixtures and the simulator.
pub fn epoch(year: i32, month: u32, day: u32, hour: u32) -> Timestamp {
    Utc.with_ymd_and_hms(year, month, day, hour, 0, 0)
        .single()
        .expect("valid calendar date")
}

pub(crate) mod serde_ms {
    use super::*;

    pub fn serialize<S: Serializer>(at: &Timestamp, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(at))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Timestamp, D::Error> {
        let text = String::deserialize(d)?;
        parse(&text).map_err(serde::de::Error::custom)
    }
}

pub(crate) mod serde_ms_opt {
    use super::*;

    pub fn serialize<S: Serializer>(at: &Option<Timestamp>, s: S) -> Result<S::Ok, S::Error> {
        match at {
            Some(at) => s.serialize_some(&format(at)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Timestamp>, D::Error> {
        let text = Option::<String>::deserialize(d)?;
        text.map(|t| parse(&t).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_with_millisecond_precision() {
        let at = parse("2024-03-05T09:15:02.123456Z").unwrap();
        assert_eq!(format(&at), "2024-03-05T09:15:02.123Z");
    }

    #[test]
    fn offsets_normalise_to_utc() {
        let at = parse("2024-03-05T10:15:02.5+01:00").unwrap();
        assert_eq!(format(&at), "2024-03-05T09:15:02.500Z");
    }
}
