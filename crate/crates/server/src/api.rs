//! HTTP wire protocol under `/v1`.
//!
//! | method | path | success |
//! |---|---|---|
//! | POST | `/v1/sessions` | 201 `{session_id}` (200 on an identical retry) |
//! | GET | `/v1/instrument` | 200 client document, `ETag`, 304 on `If-None-Match` |
//! | POST | `/v1/sessions/:id/events` | 200 `{ack_seq}` |
//! | POST | `/v1/sessions/:id/answers` | 200 acknowledgement, or the score breakdown in full mode |
//! | GET | `/v1/sessions/:id/report` | 200 aggregate and twelve-cell breakdown |
//! | GET | `/v1/admin/export` | 200 line-delimited session stream |
//!
//! Errors are `{code, message, seq_hint?}` with `code` from [`ErrorCode`].

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ctskills_core::game::{GameEvent, SessionId, TransitionError};
use ctskills_core::instrument::{InstrumentConfig, InstrumentError, Level, Question, RawChoice};
use ctskills_core::scoring::{RawSelection, ScoreBreakdown, ScoringError, Selection};
use ctskills_core::store::{ExportFilter, Gender, NewProfile, ProfileError, SessionStore, StoreError};
use ctskills_core::time::{self, Timestamp};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Header selecting how much score detail an answer response carries.
pub const MODE_HEADER: &str = "x-assessment-mode";

/// The closed set of machine-readable error codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    InvalidBody,
    InvalidQuery,
    InvalidSessionId,
    GradeOutOfRange,
    AgeOutOfRange,
    InvalidLanguage,
    DuplicateSession,
    UnknownSession,
    SeqGap,
    SeqConflict,
    SessionClosed,
    SessionOpen,
    ForeignEvent,
    InvalidEvent,
    OutOfOrderQuestion,
    KindMismatch,
    OffPalette,
    Unauthorized,
    AdminDisabled,
    NotFound,
    Internal,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 21] = [
        ErrorCode::InvalidBody,
        ErrorCode::InvalidQuery,
        ErrorCode::InvalidSessionId,
        ErrorCode::GradeOutOfRange,
        ErrorCode::AgeOutOfRange,
        ErrorCode::InvalidLanguage,
        ErrorCode::DuplicateSession,
        ErrorCode::UnknownSession,
        ErrorCode::SeqGap,
        ErrorCode::SeqConflict,
        ErrorCode::SessionClosed,
        ErrorCode::SessionOpen,
        ErrorCode::ForeignEvent,
        ErrorCode::InvalidEvent,
        ErrorCode::OutOfOrderQuestion,
        ErrorCode::KindMismatch,
        ErrorCode::OffPalette,
        ErrorCode::Unauthorized,
        ErrorCode::AdminDisabled,
        ErrorCode::NotFound,
        ErrorCode::Internal,
    ];

    pub fn status(self) -> StatusCode {
        use ErrorCode::*;
        match self {
            InvalidBody | InvalidQuery | InvalidSessionId => StatusCode::BAD_REQUEST,
            GradeOutOfRange | AgeOutOfRange | InvalidLanguage | ForeignEvent | InvalidEvent | KindMismatch
            | OffPalette => StatusCode::UNPROCESSABLE_ENTITY,
            DuplicateSession | SeqGap | SeqConflict | SessionClosed | SessionOpen | OutOfOrderQuestion => {
                StatusCode::CONFLICT
            }
            UnknownSession | NotFound => StatusCode::NOT_FOUND,
            Unauthorized => StatusCode::UNAUTHORIZED,
            AdminDisabled => StatusCode::FORBIDDEN,
            Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seq_hint: Option<u64>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            seq_hint: None,
        }
    }

    fn hint(mut self, seq: Option<u64>) -> Self {
        self.seq_hint = seq;
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.code == ErrorCode::Internal {
            tracing::error!(message = %self.message, "internal error");
        }
        (self.code.status(), Json(self)).into_response()
    }
}

fn transition_code(reason: &TransitionError) -> ErrorCode {
    match reason {
        TransitionError::QuestionOutOfOrder { .. } => ErrorCode::OutOfOrderQuestion,
        TransitionError::Scoring(ScoringError::KindMismatch { .. }) => ErrorCode::KindMismatch,
        TransitionError::Scoring(ScoringError::OffPalette { .. }) => ErrorCode::OffPalette,
        _ => ErrorCode::InvalidEvent,
    }
}

impl From<StoreError> for ApiError {
    fn from(err: StoreError) -> Self {
        let hint = err.next_seq();
        let code = match &err {
            StoreError::InvalidProfile(ProfileError::GradeOutOfRange { .. }) => ErrorCode::GradeOutOfRange,
            StoreError::InvalidProfile(ProfileError::AgeOutOfRange(_)) => ErrorCode::AgeOutOfRange,
            StoreError::InvalidProfile(ProfileError::InvalidLanguage(_)) => ErrorCode::InvalidLanguage,
            StoreError::DuplicateSession(_) => ErrorCode::DuplicateSession,
            StoreError::UnknownSession(_) => ErrorCode::UnknownSession,
            StoreError::Gap { .. } => ErrorCode::SeqGap,
            StoreError::Conflict { .. } => ErrorCode::SeqConflict,
            StoreError::Closed(_) => ErrorCode::SessionClosed,
            StoreError::ForeignEvent { .. } => ErrorCode::ForeignEvent,
            StoreError::Rejected { reason, .. } => transition_code(reason),
            StoreError::OutOfOrderQuestion { .. } => ErrorCode::OutOfOrderQuestion,
            _ => ErrorCode::Internal,
        };
        ApiError::new(code, err.to_string()).hint(hint)
    }
}

/// Shared handler state: the store and the pre-rendered instrument document.
#[derive(Clone)]
pub struct AppState {
    store: Arc<SessionStore>,
    admin_token: Option<Arc<str>>,
    instrument_body: Bytes,
    instrument_etag: HeaderValue,
}

impl AppState {
    pub fn new(store: Arc<SessionStore>, admin_token: Option<String>) -> Self {
        let body = serde_json::to_vec(&store.config().client_document()).expect("document serializes");
        let digest = Sha256::digest(&body);
        let hex: String = digest.iter().take(16).map(|b| format!("{b:02x}")).collect();
        Self {
            store,
            admin_token: admin_token.filter(|t| !t.is_empty()).map(Arc::from),
            instrument_etag: HeaderValue::from_str(&format!("\"{hex}\"")).expect("ascii etag"),
            instrument_body: Bytes::from(body),
        }
    }

    pub fn store(&self) -> &Arc<SessionStore> {
        &self.store
    }

    fn config(&self) -> &InstrumentConfig {
        self.store.config()
    }

    fn is_admin(&self, headers: &HeaderMap) -> Result<bool, ApiError> {
        let Some(expected) = &self.admin_token else {
            return Ok(false);
        };
        let Some(value) = headers.get(header::AUTHORIZATION) else {
            return Ok(false);
        };
        let presented = value
            .to_str()
            .ok()
            .and_then(|v| v.strip_prefix("Bearer "))
            .ok_or_else(|| ApiError::new(ErrorCode::Unauthorized, "malformed authorization header"))?;
        // compare digests so the comparison time does not depend on the token prefix
        if Sha256::digest(presented.as_bytes()) == Sha256::digest(expected.as_bytes()) {
            Ok(true)
        } else {
            Err(ApiError::new(ErrorCode::Unauthorized, "invalid admin token"))
        }
    }

    fn require_admin(&self, headers: &HeaderMap) -> Result<(), ApiError> {
        if self.admin_token.is_none() {
            return Err(ApiError::new(ErrorCode::AdminDisabled, "no admin token is configured"));
        }
        if self.is_admin(headers)? {
            Ok(())
        } else {
            Err(ApiError::new(ErrorCode::Unauthorized, "admin token required"))
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/sessions", post(create_session))
        .route("/v1/instrument", get(instrument))
        .route("/v1/sessions/:id/events", post(append_events))
        .route("/v1/sessions/:id/answers", post(submit_answer))
        .route("/v1/sessions/:id/report", get(report))
        .route("/v1/admin/export", get(export))
        .fallback(|| async { ApiError::new(ErrorCode::NotFound, "no such endpoint") })
        .with_state(state)
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(ErrorCode::InvalidBody, format!("malformed body: {e}")))
}

fn session_id(raw: &str) -> Result<SessionId, ApiError> {
    SessionId::new(raw).map_err(|e| ApiError::new(ErrorCode::InvalidSessionId, e.to_string()))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(ErrorCode::Internal, e.to_string()))?
}

#[derive(Debug, Deserialize)]
struct ProfileBody {
    #[serde(default)]
    session_id: Option<String>,
    age: u8,
    grade: u8,
    gender: Gender,
    language: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreatedBody {
    pub session_id: SessionId,
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let body: ProfileBody = parse_body(&body)?;
    let mut profile = NewProfile::new(body.age, body.grade, body.gender, &body.language)
        .map_err(|e| ApiError::from(StoreError::from(e)))?;
    if let Some(raw) = body.session_id.as_deref() {
        profile = profile.with_id(session_id(raw)?);
    }
    let store = state.store.clone();
    let created = blocking(move || store.create_session(profile).map_err(ApiError::from)).await?;
    let status = if created.created { StatusCode::CREATED } else { StatusCode::OK };
    Ok((status, Json(CreatedBody { session_id: created.session_id })).into_response())
}

async fn instrument(State(state): State<AppState>, headers: HeaderMap) -> Response {
    let etag = state.instrument_etag.clone();
    let matches = headers
        .get(header::IF_NONE_MATCH)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.split(',').any(|t| t.trim() == etag.to_str().unwrap_or_default() || t.trim() == "*"));
    if matches {
        return (StatusCode::NOT_MODIFIED, [(header::ETAG, etag)]).into_response();
    }
    (
        [
            (header::ETAG, etag),
            (header::CONTENT_TYPE, HeaderValue::from_static("application/json")),
        ],
        state.instrument_body.clone(),
    )
        .into_response()
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum EventBatch {
    Wrapped { events: Vec<GameEvent> },
    Bare(Vec<GameEvent>),
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AckBody {
    pub ack_seq: u64,
}

async fn append_events(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Json<AckBody>, ApiError> {
    let id = session_id(&id)?;
    let events = match parse_body::<EventBatch>(&body)? {
        EventBatch::Wrapped { events } | EventBatch::Bare(events) => events,
    };
    let store = state.store.clone();
    let ack_seq = blocking(move || store.append_events(&id, events).map_err(ApiError::from)).await?;
    Ok(Json(AckBody { ack_seq }))
}

#[derive(Debug, Deserialize)]
struct AnswerBody {
    question: Question,
    level: Level,
    #[serde(default)]
    chosen: Vec<RawChoice>,
    #[serde(default = "yes")]
    attempted: bool,
    #[serde(default)]
    submitted_at: Option<String>,
    #[serde(default)]
    seq: Option<u64>,
}

fn yes() -> bool {
    true
}

/// Student-facing answer acknowledgement: no score detail.
#[derive(Debug, Serialize, Deserialize)]
pub struct AnswerAck {
    pub ack_seq: u64,
    pub question: Question,
    pub level: Level,
    pub recorded: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AnswerDetail {
    pub ack_seq: u64,
    pub breakdown: ScoreBreakdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Silent,
    Full,
}

fn mode(headers: &HeaderMap) -> Result<Mode, ApiError> {
    match headers.get(MODE_HEADER).map(|v| v.to_str().unwrap_or("").trim().to_ascii_lowercase()) {
        None => Ok(Mode::Silent),
        Some(v) if v == "silent" => Ok(Mode::Silent),
        Some(v) if v == "full" => Ok(Mode::Full),
        Some(v) => Err(ApiError::new(ErrorCode::InvalidBody, format!("unknown assessment mode {v:?}"))),
    }
}

async fn submit_answer(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, ApiError> {
    let id = session_id(&id)?;
    let mode = mode(&headers)?;
    if mode == Mode::Full {
        state.require_admin(&headers)?;
    }
    let body: AnswerBody = parse_body(&body)?;
    if !body.attempted {
        return Err(ApiError::new(
            ErrorCode::InvalidEvent,
            "an answer must be an attempt; unanswered cells are simply not submitted",
        ));
    }
    let submitted_at: Timestamp = match body.submitted_at.as_deref() {
        Some(raw) => time::parse(raw).map_err(|e| ApiError::new(ErrorCode::InvalidBody, format!("submitted_at: {e}")))?,
        None => time::now_ms(),
    };
    let raw = RawSelection {
        question: body.question,
        level: body.level,
        chosen: body.chosen,
        attempted: true,
        submitted_at,
    };
    let selection = Selection::try_from(raw).map_err(|e| match e {
        InstrumentError::ChoiceKind { .. } => ApiError::new(ErrorCode::KindMismatch, e.to_string()),
        other => ApiError::new(ErrorCode::InvalidBody, other.to_string()),
    })?;
    let seq = body.seq;
    let store = state.store.clone();
    let (ack_seq, breakdown) = blocking(move || store.submit_answer(&id, selection, seq).map_err(ApiError::from)).await?;
    Ok(match mode {
        Mode::Silent => Json(AnswerAck {
            ack_seq,
            question: breakdown.question,
            level: breakdown.level,
            recorded: true,
        })
        .into_response(),
        Mode::Full => Json(AnswerDetail { ack_seq, breakdown }).into_response(),
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReportBody {
    pub session_id: SessionId,
    pub closed: bool,
    pub aggregate: Option<f64>,
    pub cells: Vec<ScoreBreakdown>,
}

async fn report(State(state): State<AppState>, Path(id): Path<String>, headers: HeaderMap) -> Result<Json<ReportBody>, ApiError> {
    let id = session_id(&id)?;
    let admin = state.is_admin(&headers)?;
    let record = state.store.record(&id)?;
    let closed = record.closed_at.is_some();
    if !closed && !admin {
        return Err(ApiError::new(
            ErrorCode::SessionOpen,
            "scores are available once the session is finished",
        ));
    }
    Ok(Json(ReportBody {
        session_id: id,
        closed,
        aggregate: record.aggregate,
        cells: record.full_breakdown(state.config()),
    }))
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    grade: Option<u8>,
    from: Option<String>,
    to: Option<String>,
}

fn parse_time(field: &str, raw: Option<String>) -> Result<Option<Timestamp>, ApiError> {
    raw.filter(|s| !s.is_empty())
        .map(|s| time::parse(&s).map_err(|e| ApiError::new(ErrorCode::InvalidQuery, format!("{field}: {e}"))))
        .transpose()
}

async fn export(
    State(state): State<AppState>,
    headers: HeaderMap,
    query: Result<Query<ExportQuery>, axum::extract::rejection::QueryRejection>,
) -> Result<Response, ApiError> {
    state.require_admin(&headers)?;
    let Query(query) = query.map_err(|e| ApiError::new(ErrorCode::InvalidQuery, e.body_text()))?;
    let filter = ExportFilter {
        grade: query.grade,
        from: parse_time("from", query.from)?,
        to: parse_time("to", query.to)?,
    };
    let mut body = String::new();
    for line in state.store.export_lines(&filter) {
        body.push_str(&line);
        body.push('\n');
    }
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}
