//! Server-authoritative game rules.
//!
//! [`apply_event`] is the pure per-level transition function; [`SessionMachine`]
//! layers sequencing and the level / question flow on top, and [`replay`] folds
//! a complete log into final states, extracted selections and a list of issues.

mod builder;
mod events;
mod replay;
mod state;

pub use builder::{drop_point, LogBuilder};
pub use events::{EventBody, GameEvent, InvalidSessionId, SessionId, EVENT_SCHEMA_VERSION};
pub use replay::{replay, Phase, Replay, ReplayIssue, SessionMachine, TransitionError};
pub use state::{apply_event, init_level, Effect, GameState, InstanceStatus, RuleError};
