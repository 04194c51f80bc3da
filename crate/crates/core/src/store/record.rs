use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{replay, GameEvent, SessionId};
use crate::instrument::{Cell, InstrumentConfig};
use crate::scoring::{self, ScoreBreakdown, ScoringError, Selection};
use crate::time::{self, Timestamp};

use super::profile::StudentProfile;

/// Export stream schema name and version.
pub const EXPORT_SCHEMA: &str = "ctskills-sessions";
pub const RECORD_VERSION: u32 = 1;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum RecordError {
    #[error("replay rejected seq={seq}: {message}")]
    Replay { seq: u64, message: String },
    #[error("stored {field} diverge from replay")]
    Divergence { field: &'static str },
    #[error("event for session {found} in record {expected}")]
    ForeignEvent { expected: SessionId, found: SessionId },
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

/// Everything known about one session. Selections, reports and the
/// aggregate are derived from the events and the instrument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub v: u32,
    pub profile: StudentProfile,
    #[serde(with = "time::serde_ms")]
    pub created_at: Timestamp,
    #[serde(with = "time::serde_ms_opt")]
    pub closed_at: Option<Timestamp>,
    pub events: Vec<GameEvent>,
    pub selections: Vec<Selection>,
    pub reports: Vec<ScoreBreakdown>,
    pub aggregate: Option<f64>,
}

impl SessionRecord {
    pub fn empty(profile: StudentProfile, created_at: Timestamp) -> Self {
        Self {
            v: RECORD_VERSION,
            profile,
            created_at,
            closed_at: None,
            events: Vec::new(),
            selections: Vec::new(),
            reports: Vec::new(),
            aggregate: None,
        }
    }

    pub fn session_id(&self) -> &SessionId {
        &self.profile.session_id
    }

    /// Builds a record by replaying `events`; any replay issue is an error.
    pub fn derive(
        config: &InstrumentConfig,
        profile: StudentProfile,
        created_at: Timestamp,
        closed_at: Option<Timestamp>,
        events: Vec<GameEvent>,
    ) -> Result<Self, RecordError> {
        if let Some(foreign) = events.iter().find(|e| e.session_id != profile.session_id) {
            return Err(RecordError::ForeignEvent {
                expected: profile.session_id.clone(),
                found: foreign.session_id.clone(),
            });
        }
        let outcome = replay(config, &events);
        if let Some(issue) = outcome.issues.first() {
            return Err(RecordError::Replay {
                seq: issue.seq,
                message: issue.message.clone(),
            });
        }
        let mut record = Self {
            v: RECORD_VERSION,
            profile,
            created_at,
            closed_at,
            events,
            selections: Vec::new(),
            reports: Vec::new(),
            aggregate: None,
        };
        record.rescore(config, outcome.selections)?;
        Ok(record)
    }

    /// Replaces selections and recomputes reports and the aggregate.
    pub(crate) fn rescore(&mut self, config: &InstrumentConfig, selections: Vec<Selection>) -> Result<(), ScoringError> {
        let reports = score_all(config, &selections)?;
        self.aggregate = scoring::aggregate_student(&reports, config.scoring.aggregation).ok();
        self.reports = reports;
        self.selections = selections;
        Ok(())
    }

    /// Checks that stored derived fields match a fresh replay.
    pub fn verify(&self, config: &InstrumentConfig) -> Result<(), RecordError> {
        let fresh = Self::derive(
            config,
            self.profile.clone(),
            self.created_at,
            self.closed_at,
            self.events.clone(),
        )?;
        if fresh.selections != self.selections {
            return Err(RecordError::Divergence { field: "selections" });
        }
        if fresh.reports != self.reports {
            return Err(RecordError::Divergence { field: "reports" });
        }
        if fresh.aggregate != self.aggregate {
            return Err(RecordError::Divergence { field: "aggregate" });
        }
        Ok(())
    }

    pub fn report(&self, cell: Cell) -> Option<&ScoreBreakdown> {
        self.reports.iter().find(|r| r.cell() == cell)
    }

    /// Breakdown for all twelve cells, with unattempted placeholders.
    pub fn full_breakdown(&self, config: &InstrumentConfig) -> Vec<ScoreBreakdown> {
        Cell::all()
            .map(|cell| match self.report(cell) {
                Some(r) => r.clone(),
                None => {
                    let placeholder = Selection::unattempted(cell, self.created_at);
                    scoring::score_selection(config.spec(cell), &placeholder, &config.scoring)
                        .expect("unattempted cells always score")
                }
            })
            .collect()
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

/// Scores every selection in play order.
pub fn score_all(config: &InstrumentConfig, selections: &[Selection]) -> Result<Vec<ScoreBreakdown>, ScoringError> {
    selections
        .iter()
        .map(|s| scoring::score_selection(config.spec(s.cell()), s, &config.scoring))
        .collect()
}

/// First line of an export stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportHeader {
    pub schema: String,
    pub v: u32,
}

impl Default for ExportHeader {
    fn default() -> Self {
        Self {
            schema: EXPORT_SCHEMA.to_owned(),
            v: RECORD_VERSION,
        }
    }
}

impl ExportHeader {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("header serializes")
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ExportParseError {
    /// 1-based line number in the stream.
    pub line: usize,
    pub message: String,
}

/// Parses an export stream without touching any store.
pub fn read_export(input: impl std::io::Read) -> Result<Vec<SessionRecord>, ExportParseError> {
    use std::io::BufRead;
    let mut records = Vec::new();
    let mut header_seen = false;
    for (i, line) in std::io::BufReader::new(input).lines().enumerate() {
        let fail = |message: String| ExportParseError { line: i + 1, message };
        let line = line.map_err(|e| fail(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            let header: ExportHeader = serde_json::from_str(&line).map_err(|e| fail(format!("header: {e}")))?;
            if header != ExportHeader::default() {
                return Err(fail(format!("unsupported schema {} v{}", header.schema, header.v)));
            }
            header_seen = true;
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|e| fail(e.to_string()))?);
    }
    if !header_seen {
        return Err(ExportParseError {
            line: 1,
            message: "empty stream".into(),
        });
    }
    Ok(records)
}
