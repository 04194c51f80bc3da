use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instrument::{DropZone, InstanceId, Level, Point, Question};
use crate::scoring::Selection;
use crate::time::{self, Timestamp};

/// Session log schema version written into every event line.
pub const EVENT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid session id {0:?}: expected 1-64 characters of [A-Za-z0-9_-]")]
pub struct InvalidSessionId(pub String);

/// Opaque session token.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SessionId(String);

impl SessionId {
    pub fn new(id: impl Into<String>) -> Result<Self, InvalidSessionId> {
        let id = id.into();
        let ok = (1..=64).contains(&id.len())
            && id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        if ok {
            Ok(Self(id))
        } else {
            Err(InvalidSessionId(id))
        }
    }

    /// A fresh random id.
    pub fn generate() -> Self {
        Self(uuid::Uuid::new_v4().simple().to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for SessionId {
    type Error = InvalidSessionId;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<SessionId> for String {
    fn from(value: SessionId) -> Self {
        value.0
    }
}

impl FromStr for SessionId {
    type Err = InvalidSessionId;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// What happened, with its kind-specific payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventBody {
    SessionStarted {},
    LevelStarted {
        level: Level,
    },
    Drag {
        instance: InstanceId,
        from: Point,
        to: Point,
        zone: DropZone,
    },
    Catch {
        instance: InstanceId,
    },
    Miss {
        instance: InstanceId,
    },
    QuestionShown {
        question: Question,
        level: Level,
    },
    QuestionSubmitted {
        selection: Selection,
    },
    LevelCompleted {
        level: Level,
    },
}

impl EventBody {
    pub fn kind_name(&self) -> &'static str {
        match self {
            EventBody::SessionStarted {} => "session_started",
            EventBody::LevelStarted { .. } => "level_started",
            EventBody::Drag { .. } => "drag",
            EventBody::Catch { .. } => "catch",
            EventBody::Miss { .. } => "miss",
            EventBody::QuestionShown { .. } => "question_shown",
            EventBody::QuestionSubmitted { .. } => "question_submitted",
            EventBody::LevelCompleted { .. } => "level_completed",
        }
    }

    pub fn is_gameplay(&self) -> bool {
        matches!(
            self,
            EventBody::Drag { .. } | EventBody::Catch { .. } | EventBody::Miss { .. }
        )
    }
}

/// One line of a session log: `v, session_id, seq, at, received_at, kind, payload`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameEvent {
    #[serde(default = "schema_version")]
    pub v: u32,
    pub session_id: SessionId,
    pub seq: u64,
    #[serde(with = "time::serde_ms")]
    pub at: Timestamp,
    /// Server receipt time; absent until the event has been stored.
    #[serde(
        default,
        with = "time::serde_ms_opt",
        skip_serializing_if = "Option::is_none"
    )]
    pub received_at: Option<Timestamp>,
    #[serde(flatten)]
    pub body: EventBody,
}

fn schema_version() -> u32 {
    EVENT_SCHEMA_VERSION
}

impl GameEvent {
    pub fn new(session_id: SessionId, seq: u64, at: Timestamp, body: EventBody) -> Self {
        Self {
            v: EVENT_SCHEMA_VERSION,
            session_id,
            seq,
            at: time::truncate_ms(at),
            received_at: None,
            body,
        }
    }

    /// Equality ignoring the server receipt stamp; used to recognise resent events.
    pub fn same_as(&self, other: &GameEvent) -> bool {
        self.v == other.v
            && self.session_id == other.session_id
            && self.seq == other.seq
            && self.at == other.at
            && self.body == other.body
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn event_line_field_order() {
        let ev = GameEvent::new(
            "s1".parse().unwrap(),
            3,
            time::parse("2024-03-05T09:00:01.5Z").unwrap(),
            EventBody::Drag {
                instance: "apple_red#2".parse().unwrap(),
                from: Point::new(380.0, 120.0),
                to: Point::new(190.0, 570.0),
                zone: DropZone::BasketRed,
            },
        );
        let line = serde_json::to_string(&ev).unwrap();
        assert_eq!(
            line,
            r#"{"v":1,"session_id":"s1","seq":3,"at":"2024-03-05T09:00:01.500Z","kind":"drag","payload":{"instance":"apple_red#2","from":{"x":380.0,"y":120.0},"to":{"x":190.0,"y":570.0},"zone":"basket_red"}}"#
        );
        let back: GameEvent = serde_json::from_str(&line).unwrap();
        assert_eq!(back, ev);
    }

    #[test]
    fn unit_payloads_and_receipt_stamp() {
        let mut ev = GameEvent::new(
            "s1".parse().unwrap(),
            1,
            time::epoch(2024, 3, 5, 9),
            EventBody::SessionStarted {},
        );
        ev.received_at = Some(time::epoch(2024, 3, 5, 10));
        let line = serde_json::to_string(&ev).unwrap();
        assert!(line.contains(r#""received_at":"2024-03-05T10:00:00.000Z","kind":"session_started","payload":{}"#), "{line}");
        let back: GameEvent = serde_json::from_str(&line).unwrap();
        assert_eq!(back, ev);
    }

    #[test]
    fn session_ids_are_opaque_tokens() {
        assert!(SessionId::new("abc-123_X").is_ok());
        assert!(SessionId::new("").is_err());
        assert!(SessionId::new("has space").is_err());
        assert!(SessionId::new("x".repeat(65)).is_err());
        assert_eq!(SessionId::generate().as_str().len(), 32);
    }
}
