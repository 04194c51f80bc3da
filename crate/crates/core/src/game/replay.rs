use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::instrument::{Cell, InstrumentConfig, Level, Question};
use crate::scoring::{self, Selection};
use crate::time::Timestamp;

use super::events::{EventBody, GameEvent, SessionId};
use super::state::{apply_event, init_level, Effect, GameState, RuleError};

/// Where a session is in the play flow: level, then Q1..Q4, then the next level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum Phase {
    NotStarted,
    AwaitingLevel { level: Level },
    Playing { level: Level },
    Questions { level: Level, next: Question },
    Finished,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TransitionError {
    #[error("non-contiguous sequence at seq={seq} (expected {expected})")]
    Gap { seq: u64, expected: u64 },
    #[error("duplicate seq={seq}")]
    DuplicateSeq { seq: u64 },
    #[error("timestamp goes backwards at seq={seq}")]
    TimeRegression { seq: u64 },
    #[error("event for session {found} in log of session {expected}")]
    ForeignSession { expected: SessionId, found: SessionId },
    #[error("{kind} before session_started")]
    NotStarted { kind: &'static str },
    #[error("session already started")]
    AlreadyStarted,
    #[error("{kind} is not legal while {phase}")]
    WrongPhase { kind: &'static str, phase: String },
    #[error("{found} started out of order (expected {expected})")]
    LevelOutOfOrder { found: Level, expected: String },
    #[error("event for a non-current level {found}")]
    NotCurrentLevel { found: Level },
    #[error("out-of-order question {found} (expected {expected})")]
    QuestionOutOfOrder { found: Cell, expected: String },
    #[error("level completion for {0} acknowledged twice")]
    CompletionRepeated(Level),
    #[error("submitted selection for {0} is marked unattempted")]
    UnattemptedSubmission(Cell),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Scoring(#[from] scoring::ScoringError),
}

/// A rejected event in a replayed log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReplayIssue {
    pub seq: u64,
    pub message: String,
}

/// Incremental validator for one session's event log.
///
/// `apply` is all-or-nothing per event: on error the machine is unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionMachine {
    session_id: Option<SessionId>,
    last_seq: u64,
    last_at: Option<Timestamp>,
    phase: Phase,
    levels: BTreeMap<Level, GameState>,
    completion_acknowledged: Vec<Level>,
    selections: Vec<Selection>,
}

impl Default for SessionMachine {
    fn default() -> Self {
        Self::new()
    }
}

impl SessionMachine {
    pub fn new() -> Self {
        Self {
            session_id: None,
            last_seq: 0,
            last_at: None,
            phase: Phase::NotStarted,
            levels: BTreeMap::new(),
            completion_acknowledged: Vec::new(),
            selections: Vec::new(),
        }
    }

    pub fn last_seq(&self) -> u64 {
        self.last_seq
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn levels(&self) -> &BTreeMap<Level, GameState> {
        &self.levels
    }

    pub fn selections(&self) -> &[Selection] {
        &self.selections
    }

    /// The question screen awaiting an answer, if any.
    pub fn current_question(&self) -> Option<Cell> {
        match self.phase {
            Phase::Questions { level, next } => Some(Cell::new(next, level)),
            _ => None,
        }
    }

    pub fn is_finished(&self) -> bool {
        self.phase == Phase::Finished
    }

    fn check_sequence(&self, event: &GameEvent) -> Result<(), TransitionError> {
        if let Some(expected) = &self.session_id {
            if &event.session_id != expected {
                return Err(TransitionError::ForeignSession {
                    expected: expected.clone(),
                    found: event.session_id.clone(),
                });
            }
        }
        let expected = self.last_seq + 1;
        if event.seq <= self.last_seq {
            return Err(TransitionError::DuplicateSeq { seq: event.seq });
        }
        if event.seq != expected {
            return Err(TransitionError::Gap {
                seq: event.seq,
                expected,
            });
        }
        if self.last_at.is_some_and(|last| event.at < last) {
            return Err(TransitionError::TimeRegression { seq: event.seq });
        }
        Ok(())
    }

    /// Validates and applies one event.
    pub fn apply(&mut self, config: &InstrumentConfig, event: &GameEvent) -> Result<Vec<Effect>, TransitionError> {
        self.check_sequence(event)?;
        let effects = self.apply_body(config, &event.session_id, &event.body)?;
        self.last_seq = event.seq;
        self.last_at = Some(event.at);
        Ok(effects)
    }

    fn wrong_phase(&self, body: &EventBody) -> TransitionError {
        if self.phase == Phase::NotStarted {
            return TransitionError::NotStarted {
                kind: body.kind_name(),
            };
        }
        TransitionError::WrongPhase {
            kind: body.kind_name(),
            phase: format!("{:?}", self.phase),
        }
    }

    fn apply_body(
        &mut self,
        config: &InstrumentConfig,
        session_id: &SessionId,
        body: &EventBody,
    ) -> Result<Vec<Effect>, TransitionError> {
        match body {
            EventBody::SessionStarted {} => {
                if self.phase != Phase::NotStarted {
                    return Err(TransitionError::AlreadyStarted);
                }
                self.session_id = Some(session_id.clone());
                self.phase = Phase::AwaitingLevel {
                    level: Level::ALL[0],
                };
                Ok(Vec::new())
            }
            EventBody::LevelStarted { level } => match self.phase {
                Phase::AwaitingLevel { level: expected } if expected == *level => {
                    self.levels.insert(*level, init_level(config.scenery(*level)));
                    self.phase = Phase::Playing { level: *level };
                    Ok(Vec::new())
                }
                Phase::AwaitingLevel { level: expected } => Err(TransitionError::LevelOutOfOrder {
                    found: *level,
                    expected: expected.to_string(),
                }),
                _ => Err(self.wrong_phase(body)),
            },
            EventBody::Drag { .. } | EventBody::Catch { .. } | EventBody::Miss { .. } => {
                let level = match self.phase {
                    Phase::Playing { level } => level,
                    Phase::Questions { level, .. } => {
                        return Err(RuleError::LevelAlreadyCompleted(level).into())
                    }
                    _ => return Err(self.wrong_phase(body)),
                };
                let state = &self.levels[&level];
                let (next, effects) = apply_event(config.scenery(level), state, body)?;
                if next.completed {
                    self.phase = Phase::Questions {
                        level,
                        next: Question::Q1,
                    };
                }
                self.levels.insert(level, next);
                Ok(effects)
            }
            EventBody::LevelCompleted { level } => match self.phase {
                Phase::Questions { level: current, .. } if current == *level => {
                    if self.completion_acknowledged.contains(level) {
                        return Err(TransitionError::CompletionRepeated(*level));
                    }
                    self.completion_acknowledged.push(*level);
                    Ok(Vec::new())
                }
                Phase::Questions { .. } | Phase::Playing { .. } => {
                    if self.levels.get(level).is_some_and(|s| s.completed) {
                        Err(TransitionError::CompletionRepeated(*level))
                    } else {
                        Err(TransitionError::NotCurrentLevel { found: *level })
                    }
                }
                _ => Err(self.wrong_phase(body)),
            },
            EventBody::QuestionShown { question, level } => {
                let cell = Cell::new(*question, *level);
                self.expect_question(body, cell)?;
                Ok(Vec::new())
            }
            EventBody::QuestionSubmitted { selection } => {
                let cell = selection.cell();
                self.expect_question(body, cell)?;
                if !selection.attempted() {
                    return Err(TransitionError::UnattemptedSubmission(cell));
                }
                scoring::classify(config.spec(cell), selection.chosen())?;
                self.selections.push(selection.clone());
                self.phase = match (cell.question.next(), cell.level.next()) {
                    (Some(next), _) => Phase::Questions {
                        level: cell.level,
                        next,
                    },
                    (None, Some(level)) => Phase::AwaitingLevel { level },
                    (None, None) => Phase::Finished,
                };
                Ok(Vec::new())
            }
        }
    }

    fn expect_question(&self, body: &EventBody, cell: Cell) -> Result<(), TransitionError> {
        match self.current_question() {
            Some(expected) if expected == cell => Ok(()),
            Some(expected) => Err(TransitionError::QuestionOutOfOrder {
                found: cell,
                expected: expected.to_string(),
            }),
            None => match self.phase {
                Phase::Playing { .. } | Phase::AwaitingLevel { .. } | Phase::Finished => {
                    Err(TransitionError::QuestionOutOfOrder {
                        found: cell,
                        expected: format!("no question while {:?}", self.phase),
                    })
                }
                _ => Err(self.wrong_phase(body)),
            },
        }
    }
}

/// Outcome of replaying a full event log.
#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub levels: BTreeMap<Level, GameState>,
    pub selections: Vec<Selection>,
    pub effects: Vec<(u64, Effect)>,
    pub issues: Vec<ReplayIssue>,
    pub phase: Phase,
}

impl Replay {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Folds a log through the session machine. Illegal events are skipped and
/// reported by seq; the rest of the log is still replayed.
pub fn replay(config: &InstrumentConfig, events: &[GameEvent]) -> Replay {
    let mut machine = SessionMachine::new();
    let mut effects = Vec::new();
    let mut issues = Vec::new();
    for event in events {
        match machine.apply(config, event) {
            Ok(fx) => effects.extend(fx.into_iter().map(|e| (event.seq, e))),
            Err(err) => {
                issues.push(ReplayIssue {
                    seq: event.seq,
                    message: err.to_string(),
                });
                match err {
                    TransitionError::Gap { .. } => {
                        // resynchronise so one gap is reported once
                        machine.last_seq = event.seq;
                        match machine.apply_body(config, &event.session_id, &event.body) {
                            Ok(fx) => effects.extend(fx.into_iter().map(|e| (event.seq, e))),
                            Err(err) => issues.push(ReplayIssue {
                                seq: event.seq,
                                message: err.to_string(),
                            }),
                        }
                        machine.last_at = Some(event.at);
                    }
                    TransitionError::DuplicateSeq { .. }
                    | TransitionError::TimeRegression { .. }
                    | TransitionError::ForeignSession { .. } => {}
                    _ => {
                        // the event is rejected but its seq is consumed
                        machine.last_seq = event.seq;
                        machine.last_at = Some(event.at);
                    }
                }
            }
        }
    }
    Replay {
        levels: machine.levels,
        selections: machine.selections,
        effects,
        issues,
        phase: machine.phase,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{InstanceStatus, LogBuilder};
    use crate::instrument::{Choice, DropZone, InstanceId};
    use crate::time;

    fn config() -> InstrumentConfig {
        InstrumentConfig::default_instrument()
    }

    fn builder(config: &InstrumentConfig) -> LogBuilder<'_> {
        LogBuilder::new(config, "s-1".parse().unwrap(), time::epoch(2024, 3, 5, 9))
    }

    fn l(n: u8) -> Level {
        Level::new(n).unwrap()
    }

    #[test]
    fn perfect_session_replays_cleanly() {
        let config = config();
        let mut b = builder(&config);
        b.perfect_session();
        let out = replay(&config, b.events());
        assert!(out.is_clean(), "{:?}", out.issues);
        assert_eq!(out.levels.len(), 3);
        assert!(out.levels.values().all(|s| s.completed));
        assert_eq!(out.selections.len(), 12);
        assert_eq!(out.phase, Phase::Finished);
    }

    #[test]
    fn empty_log_is_identity() {
        let out = replay(&config(), &[]);
        assert!(out.levels.is_empty());
        assert!(out.selections.is_empty());
        assert!(out.is_clean());
        assert_eq!(out.phase, Phase::NotStarted);
    }

    #[test]
    fn sequence_gap_reported_once() {
        let config = config();
        let mut b = builder(&config);
        b.session_started().level_started(l(1));
        let mut events = b.finish();
        let mut b = builder(&config).resume(3);
        b.drag(l(1), &"apple_red#1".parse().unwrap(), DropZone::BasketRed)
            .drag(l(1), &"apple_red#2".parse().unwrap(), DropZone::BasketRed);
        events.extend(b.finish());
        let out = replay(&config, &events);
        assert_eq!(out.issues.len(), 1);
        assert_eq!(out.issues[0].seq, 4);
        assert!(out.issues[0].message.contains("non-contiguous sequence at seq=4"));
        assert_eq!(out.levels[&l(1)].score, 2);
    }

    #[test]
    fn duplicate_seq_flagged() {
        let config = config();
        let mut b = builder(&config);
        b.session_started().level_started(l(1));
        let mut events = b.finish();
        events.push(events[1].clone());
        let out = replay(&config, &events);
        assert_eq!(out.issues.len(), 1);
        assert!(out.issues[0].message.contains("duplicate seq=2"));
    }

    #[test]
    fn questions_must_follow_level_completion_in_order() {
        let config = config();
        let mut b = builder(&config);
        b.session_started().level_started(l(1));
        let cell = Cell::new(Question::Q1, l(1));
        b.submit(cell, []);
        let out = replay(&config, b.events());
        assert_eq!(out.issues.len(), 1);
        assert!(out.issues[0].message.contains("out-of-order question"), "{:?}", out.issues);

        let mut b = builder(&config);
        b.session_started().play_level_cleanly(l(1));
        b.submit(Cell::new(Question::Q2, l(1)), []);
        let out = replay(&config, b.events());
        assert!(out.issues[0].message.contains("out-of-order question Q2/L1 (expected Q1/L1)"));
    }

    #[test]
    fn levels_start_in_order() {
        let config = config();
        let mut b = builder(&config);
        b.session_started().level_started(l(2));
        let out = replay(&config, b.events());
        assert!(out.issues[0].message.contains("started out of order"));

        let mut b = builder(&config);
        b.level_started(l(1));
        let out = replay(&config, b.events());
        assert!(out.issues[0].message.contains("before session_started"));
    }

    #[test]
    fn no_gameplay_after_completion() {
        let config = config();
        let mut b = builder(&config);
        b.session_started().play_level_cleanly(l(1));
        b.drag(l(1), &"apple_red#1".parse().unwrap(), DropZone::Other);
        let out = replay(&config, b.events());
        assert_eq!(out.issues.len(), 1);
        assert!(out.issues[0].message.contains("already completed"));
    }

    #[test]
    fn rule_violations_surface_with_seq() {
        let config = config();
        let apple: InstanceId = "apple_red#1".parse().unwrap();
        let mut b = builder(&config);
        b.session_started()
            .level_started(l(1))
            .drag(l(1), &apple, DropZone::Grass)
            .drag(l(1), &apple, DropZone::BasketRed);
        let out = replay(&config, b.events());
        assert_eq!(out.issues, vec![ReplayIssue { seq: 4, message: "immobile instance apple_red#1".into() }]);
        assert_eq!(out.levels[&l(1)].instances[&apple], InstanceStatus::Spoiled);
    }

    #[test]
    fn kind_mismatch_in_submission_rejected() {
        let config = config();
        let mut b = builder(&config);
        b.session_started().play_level_cleanly(l(1));
        let q1 = Cell::new(Question::Q1, l(1));
        let q2 = Cell::new(Question::Q2, l(1));
        let q3 = Cell::new(Question::Q3, l(1));
        b.submit(q1, []).submit(q2, []);
        b.submit(q3, [Choice::Item("apple_red".parse().unwrap())]);
        let out = replay(&config, b.events());
        assert_eq!(out.issues.len(), 1);
        assert!(out.issues[0].message.contains("does not match the question kind"));
        assert_eq!(out.selections.len(), 2);
    }

    #[test]
    fn timestamps_may_not_regress() {
        let config = config();
        let mut b = builder(&config);
        b.session_started().level_started(l(1));
        let mut events = b.finish();
        events[1].at = events[0].at - chrono::Duration::seconds(1);
        let out = replay(&config, &events);
        assert!(out.issues[0].message.contains("timestamp goes backwards"));
    }

    #[test]
    fn replay_is_deterministic() {
        let config = config();
        let mut b = builder(&config);
        b.perfect_session();
        assert_eq!(replay(&config, b.events()), replay(&config, b.events()));
    }

    #[test]
    fn machine_rejects_atomically() {
        let config = config();
        let mut b = builder(&config);
        b.session_started().level_started(l(2));
        let events = b.finish();
        let mut machine = SessionMachine::new();
        machine.apply(&config, &events[0]).unwrap();
        let before = machine.clone();
        assert!(machine.apply(&config, &events[1]).is_err());
        assert_eq!(machine, before);
    }
}
