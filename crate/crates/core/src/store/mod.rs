//! Append-only session persistence.
//!
//! Layout under the data directory:
//!
//! ```text
//! index.jsonl            one line per create / close
//! sessions/<id>.jsonl    one event per line, in seq order
//! ```
//!
//! Every batch is validated by replay before it touches disk and is synced
//! before it is acknowledged. A torn final line left by a crash is discarded
//! when the store is reopened.

mod profile;
mod record;

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{GameEvent, SessionId, SessionMachine, TransitionError};
use crate::instrument::{Cell, InstrumentConfig};
use crate::scoring::{ScoreBreakdown, Selection};
use crate::time::{self, Timestamp};

pub use profile::{Gender, LanguageTag, NewProfile, ProfileError, StudentProfile, AGE_RANGE};
pub use record::{
    read_export, score_all, ExportHeader, ExportParseError, RecordError, SessionRecord, EXPORT_SCHEMA, RECORD_VERSION,
};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error(transparent)]
    InvalidProfile(#[from] ProfileError),
    #[error("session {0} already exists with a different profile")]
    DuplicateSession(SessionId),
    #[error("unknown session {0}")]
    UnknownSession(SessionId),
    #[error("gap: got seq={found} where seq={expected} was expected")]
    Gap { expected: u64, found: u64, next: u64 },
    #[error("seq={seq} conflicts with the stored event")]
    Conflict { seq: u64, next: u64 },
    #[error("session {0} is closed")]
    Closed(SessionId),
    #[error("event addressed to session {found} posted to {expected}")]
    ForeignEvent { expected: SessionId, found: SessionId },
    #[error("rejected seq={seq}: {reason}")]
    Rejected { seq: u64, reason: TransitionError, next: u64 },
    #[error("no answer is expected for {found} (current screen: {expected})")]
    OutOfOrderQuestion { found: Cell, expected: String },
    #[error("{path}:{line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
    #[error("export stream: {0}")]
    Schema(String),
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl StoreError {
    /// The seq a client should send next, where one is known.
    pub fn next_seq(&self) -> Option<u64> {
        match self {
            StoreError::Gap { next, .. } | StoreError::Conflict { next, .. } | StoreError::Rejected { next, .. } => {
                Some(*next)
            }
            _ => None,
        }
    }
}

pub type Clock = Arc<dyn Fn() -> Timestamp + Send + Sync>;

#[derive(Debug, Clone)]
pub struct Created {
    pub session_id: SessionId,
    /// False when an identical create was replayed.
    pub created: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExportFilter {
    pub grade: Option<u8>,
    pub from: Option<Timestamp>,
    pub to: Option<Timestamp>,
}

impl ExportFilter {
    pub fn matches(&self, record: &SessionRecord) -> bool {
        self.grade.is_none_or(|g| record.profile.grade == g)
            && self.from.is_none_or(|from| record.created_at >= from)
            && self.to.is_none_or(|to| record.created_at <= to)
    }
}

#[derive(Debug, Default)]
pub struct ImportSummary {
    pub accepted: usize,
    /// (1-based line number, reason)
    pub rejected: Vec<(usize, String)>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
enum IndexEntry {
    Create {
        profile: StudentProfile,
        #[serde(with = "time::serde_ms")]
        created_at: Timestamp,
    },
    Close {
        session_id: SessionId,
        #[serde(with = "time::serde_ms")]
        closed_at: Timestamp,
    },
}

struct Slot {
    record: SessionRecord,
    machine: SessionMachine,
}

pub struct SessionStore {
    config: Arc<InstrumentConfig>,
    root: Option<PathBuf>,
    sessions: RwLock<BTreeMap<SessionId, Arc<Mutex<Slot>>>>,
    index: Mutex<()>,
    clock: Clock,
}

impl SessionStore {
    /// A store that keeps everything in memory.
    pub fn in_memory(config: Arc<InstrumentConfig>) -> Self {
        Self {
            config,
            root: None,
            sessions: RwLock::default(),
            index: Mutex::new(()),
            clock: Arc::new(time::now_ms),
        }
    }

    /// Opens (or initialises) a store rooted at `dir`, replaying every stored log.
    pub fn open(dir: impl AsRef<Path>, config: Arc<InstrumentConfig>) -> Result<Self, StoreError> {
        let root = dir.as_ref().to_path_buf();
        fs::create_dir_all(root.join("sessions"))?;
        let store = Self {
            root: Some(root.clone()),
            ..Self::in_memory(config)
        };
        let index_path = root.join("index.jsonl");
        let mut sessions = BTreeMap::new();
        for (line_no, entry) in read_lines::<IndexEntry>(&index_path)? {
            match entry {
                IndexEntry::Create { profile, created_at } => {
                    let id = profile.session_id.clone();
                    let log = store.session_path(&id).expect("rooted");
                    let events: Vec<GameEvent> = read_lines(&log)?.into_iter().map(|(_, e)| e).collect();
                    let mut machine = SessionMachine::new();
                    for event in &events {
                        machine
                            .apply(&store.config, event)
                            .map_err(|err| StoreError::Corrupt {
                                path: log.clone(),
                                line: event.seq as usize,
                                message: err.to_string(),
                            })?;
                    }
                    let mut record = SessionRecord::empty(profile, created_at);
                    record.events = events;
                    record
                        .rescore(&store.config, machine.selections().to_vec())
                        .map_err(RecordError::from)?;
                    sessions.insert(id, Slot { record, machine });
                }
                IndexEntry::Close { session_id, closed_at } => {
                    let slot = sessions.get_mut(&session_id).ok_or_else(|| StoreError::Corrupt {
                        path: index_path.clone(),
                        line: line_no,
                        message: format!("close for unknown session {session_id}"),
                    })?;
                    slot.record.closed_at = Some(closed_at);
                }
            }
        }
        *store.sessions.write().expect("lock") = sessions
            .into_iter()
            .map(|(id, slot)| (id, Arc::new(Mutex::new(slot))))
            .collect();
        Ok(store)
    }

    /// Replaces the wall clock, mainly for reproducible tests.
    pub fn with_clock(mut self, clock: impl Fn() -> Timestamp + Send + Sync + 'static) -> Self {
        self.clock = Arc::new(clock);
        self
    }

    pub fn config(&self) -> &Arc<InstrumentConfig> {
        &self.config
    }

    fn now(&self) -> Timestamp {
        (self.clock)()
    }

    fn session_path(&self, id: &SessionId) -> Option<PathBuf> {
        self.root
            .as_ref()
            .map(|r| r.join("sessions").join(format!("{id}.jsonl")))
    }

    fn append_index(&self, entry: &IndexEntry) -> io::Result<()> {
        let Some(root) = &self.root else {
            return Ok(());
        };
        let _guard = self.index.lock().expect("index lock");
        let mut line = serde_json::to_string(entry).expect("index entry serializes");
        line.push('\n');
        append_synced(&root.join("index.jsonl"), line.as_bytes())
    }

    fn slot(&self, id: &SessionId) -> Result<Arc<Mutex<Slot>>, StoreError> {
        self.sessions
            .read()
            .expect("sessions lock")
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::UnknownSession(id.clone()))
    }

    pub fn create_session(&self, new: NewProfile) -> Result<Created, StoreError> {
        new.validate(self.config.grades)?;
        let id = new.session_id.clone().unwrap_or_else(SessionId::generate);
        let profile = new.into_profile(id.clone());
        let mut sessions = self.sessions.write().expect("sessions lock");
        if let Some(existing) = sessions.get(&id) {
            let existing = existing.lock().expect("slot lock");
            return if existing.record.profile == profile {
                Ok(Created {
                    session_id: id,
                    created: false,
                })
            } else {
                Err(StoreError::DuplicateSession(id))
            };
        }
        let created_at = self.now();
        if let Some(path) = self.session_path(&id) {
            File::create(&path)?.sync_all()?;
        }
        self.append_index(&IndexEntry::Create {
            profile: profile.clone(),
            created_at,
        })?;
        let slot = Slot {
            record: SessionRecord::empty(profile, created_at),
            machine: SessionMachine::new(),
        };
        sessions.insert(id.clone(), Arc::new(Mutex::new(slot)));
        Ok(Created {
            session_id: id,
            created: true,
        })
    }

    /// Appends a batch and returns the highest stored seq.
    ///
    /// Events already stored with identical content are acknowledged again; the
    /// remainder must continue the log without gaps and replay cleanly, or the
    /// whole batch is rejected.
    pub fn append_events(&self, id: &SessionId, batch: Vec<GameEvent>) -> Result<u64, StoreError> {
        let slot = self.slot(id)?;
        let mut slot = slot.lock().expect("slot lock");
        self.append_locked(&mut slot, batch)
    }

    fn append_locked(&self, slot: &mut Slot, batch: Vec<GameEvent>) -> Result<u64, StoreError> {
        let id = slot.record.session_id().clone();
        let last = slot.machine.last_seq();
        let mut fresh = Vec::new();
        for event in batch {
            if event.session_id != id {
                return Err(StoreError::ForeignEvent {
                    expected: id,
                    found: event.session_id,
                });
            }
            if event.seq >= 1 && event.seq <= last {
                let stored = &slot.record.events[event.seq as usize - 1];
                if !stored.same_as(&event) {
                    return Err(StoreError::Conflict {
                        seq: event.seq,
                        next: last + 1,
                    });
                }
            } else {
                fresh.push(event);
            }
        }
        if fresh.is_empty() {
            return Ok(last);
        }
        for (expected, event) in (last + 1..).zip(&fresh) {
            if event.seq != expected {
                return Err(StoreError::Gap {
                    expected,
                    found: event.seq,
                    next: last + 1,
                });
            }
        }
        if slot.record.closed_at.is_some() {
            return Err(StoreError::Closed(id));
        }

        let mut machine = slot.machine.clone();
        let received = self.now();
        for event in &mut fresh {
            machine
                .apply(&self.config, event)
                .map_err(|reason| StoreError::Rejected {
                    seq: event.seq,
                    reason,
                    next: last + 1,
                })?;
            event.received_at = Some(received);
        }
        let mut record = slot.record.clone();
        record.events.extend(fresh.iter().cloned());
        record
            .rescore(&self.config, machine.selections().to_vec())
            .map_err(RecordError::from)?;

        if let Some(path) = self.session_path(&id) {
            let mut bytes = Vec::new();
            for event in &fresh {
                serde_json::to_writer(&mut bytes, event).expect("event serializes");
                bytes.push(b'\n');
            }
            append_synced(&path, &bytes)?;
        }
        let closing = machine.is_finished();
        if closing {
            self.append_index(&IndexEntry::Close {
                session_id: id,
                closed_at: received,
            })?;
            record.closed_at = Some(received);
        }
        slot.record = record;
        slot.machine = machine;
        Ok(slot.machine.last_seq())
    }

    /// Records an answer for the current question screen and returns its seq and score.
    ///
    /// When `seq` is omitted the answer takes the next free seq. Resending an
    /// already-stored answer with its seq returns the stored result.
    pub fn submit_answer(
        &self,
        id: &SessionId,
        selection: Selection,
        seq: Option<u64>,
    ) -> Result<(u64, ScoreBreakdown), StoreError> {
        let slot = self.slot(id)?;
        let mut slot = slot.lock().expect("slot lock");
        let cell = selection.cell();
        let seq = seq.unwrap_or(slot.machine.last_seq() + 1);
        let resend = seq <= slot.machine.last_seq();
        if !resend && slot.record.closed_at.is_none() {
            match slot.machine.current_question() {
                Some(expected) if expected == cell => {}
                expected => {
                    return Err(StoreError::OutOfOrderQuestion {
                        found: cell,
                        expected: expected.map_or_else(|| "none".to_owned(), |c| c.to_string()),
                    })
                }
            }
        }
        let event = GameEvent::new(
            id.clone(),
            seq,
            selection.submitted_at(),
            crate::game::EventBody::QuestionSubmitted { selection },
        );
        let ack = self.append_locked(&mut slot, vec![event])?;
        let report = slot
            .record
            .report(cell)
            .cloned()
            .expect("stored answers have reports");
        Ok((ack, report))
    }

    /// Closes a session; later appends with new events are refused.
    pub fn close_session(&self, id: &SessionId) -> Result<Timestamp, StoreError> {
        let slot = self.slot(id)?;
        let mut slot = slot.lock().expect("slot lock");
        if let Some(at) = slot.record.closed_at {
            return Ok(at);
        }
        let at = self.now();
        self.append_index(&IndexEntry::Close {
            session_id: id.clone(),
            closed_at: at,
        })?;
        slot.record.closed_at = Some(at);
        Ok(at)
    }

    pub fn record(&self, id: &SessionId) -> Result<SessionRecord, StoreError> {
        Ok(self.slot(id)?.lock().expect("slot lock").record.clone())
    }

    pub fn current_question(&self, id: &SessionId) -> Result<Option<Cell>, StoreError> {
        Ok(self.slot(id)?.lock().expect("slot lock").machine.current_question())
    }

    pub fn session_ids(&self) -> Vec<SessionId> {
        self.sessions.read().expect("sessions lock").keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("sessions lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Snapshot of matching records, in session id order.
    pub fn snapshot(&self, filter: &ExportFilter) -> Vec<SessionRecord> {
        let slots: Vec<_> = self.sessions.read().expect("sessions lock").values().cloned().collect();
        slots
            .into_iter()
            .map(|s| s.lock().expect("slot lock").record.clone())
            .filter(|r| filter.matches(r))
            .collect()
    }

    /// Export stream: a header line, then one session document per line.
    pub fn export_lines(&self, filter: &ExportFilter) -> Vec<String> {
        std::iter::once(ExportHeader::default().to_line())
            .chain(self.snapshot(filter).iter().map(SessionRecord::to_line))
            .collect()
    }

    pub fn export_to(&self, filter: &ExportFilter, mut out: impl Write) -> io::Result<usize> {
        let lines = self.export_lines(filter);
        for line in &lines {
            out.write_all(line.as_bytes())?;
            out.write_all(b"\n")?;
        }
        Ok(lines.len() - 1)
    }

    /// Imports an export stream. Bad lines are reported and skipped.
    pub fn import(&self, input: impl Read) -> Result<ImportSummary, StoreError> {
        let mut lines = BufReader::new(input).lines();
        let header = lines
            .next()
            .ok_or_else(|| StoreError::Schema("empty stream".into()))??;
        let header: ExportHeader =
            serde_json::from_str(&header).map_err(|e| StoreError::Schema(format!("header: {e}")))?;
        if header != ExportHeader::default() {
            return Err(StoreError::Schema(format!(
                "unsupported schema {} v{}",
                header.schema, header.v
            )));
        }
        let mut summary = ImportSummary::default();
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match self.import_line(&line) {
                Ok(()) => summary.accepted += 1,
                Err(err) => summary.rejected.push((line_no, err.to_string())),
            }
        }
        Ok(summary)
    }

    fn import_line(&self, line: &str) -> Result<(), StoreError> {
        let record: SessionRecord =
            serde_json::from_str(line).map_err(|e| StoreError::Schema(e.to_string()))?;
        record.verify(&self.config)?;
        let id = record.session_id().clone();
        let profile = &record.profile;
        NewProfile {
            session_id: None,
            age: profile.age,
            grade: profile.grade,
            gender: profile.gender,
            language: profile.language.clone(),
        }
        .validate(self.config.grades)?;

        let mut sessions = self.sessions.write().expect("sessions lock");
        if sessions.contains_key(&id) {
            return Err(StoreError::DuplicateSession(id));
        }
        let mut machine = SessionMachine::new();
        for event in &record.events {
            machine
                .apply(&self.config, event)
                .map_err(|err| RecordError::Replay {
                    seq: event.seq,
                    message: err.to_string(),
                })?;
        }
        if let Some(path) = self.session_path(&id) {
            let mut bytes = Vec::new();
            for event in &record.events {
                serde_json::to_writer(&mut bytes, event).expect("event serializes");
                bytes.push(b'\n');
            }
            let mut file = File::create(&path)?;
            file.write_all(&bytes)?;
            file.sync_all()?;
        }
        self.append_index(&IndexEntry::Create {
            profile: record.profile.clone(),
            created_at: record.created_at,
        })?;
        if let Some(closed_at) = record.closed_at {
            self.append_index(&IndexEntry::Close {
                session_id: id.clone(),
                closed_at,
            })?;
        }
        sessions.insert(id, Arc::new(Mutex::new(Slot { record, machine })));
        Ok(())
    }
}

fn append_synced(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    let before = file.metadata()?.len();
    let result = file.write_all(bytes).and_then(|_| file.sync_data());
    if result.is_err() {
        // leave no partial batch behind
        let _ = file.set_len(before);
    }
    result
}

/// Reads a JSONL file. A final line without its newline is a torn write and is
/// truncated away; any other malformed line is corruption.
fn read_lines<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>, StoreError> {
    let mut bytes = Vec::new();
    match File::open(path) {
        Ok(mut f) => {
            f.read_to_end(&mut bytes)?;
        }
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    }
    let complete = bytes.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
    if complete < bytes.len() {
        OpenOptions::new().write(true).open(path)?.set_len(complete as u64)?;
    }
    let text = std::str::from_utf8(&bytes[..complete]).map_err(|e| StoreError::Corrupt {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map(|v| (i + 1, v))
                .map_err(|e| StoreError::Corrupt {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: e.to_string(),
                })
        })
        .collect()
}
