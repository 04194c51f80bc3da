//! The `ctskills` command line.
//!
//! Exit codes: 0 success, 1 domain error (failed validation, illegal log,
//! unscorable cell), 2 input or parse error.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use ctskills_core::analytics::{self, simulate_cohort, write_tables, CohortProfile};
use ctskills_core::game::{replay, GameEvent};
use ctskills_core::instrument::{load_instrument, Cell, InstrumentConfig, Level, Question};
use ctskills_core::scoring::{aggregate_student, score_selection, MinScoreMode, ScoreBreakdown, Selection};
use ctskills_core::store::{read_export, ExportFilter, ExportHeader, SessionRecord, SessionStore};
use ctskills_core::time;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "ctskills", version, about = "CTSkills assessment service and offline tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "LISTEN_ADDR", default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        #[arg(long, env = "DATA_DIR", default_value = "data")]
        data: PathBuf,
        #[arg(long, env = "INSTRUMENT_PATH")]
        instrument: Option<PathBuf>,
        #[arg(long, env = "ADMIN_TOKEN", hide_env_values = true)]
        admin_token: Option<String>,
    },
    /// Score a session log (or every session of an export stream).
    Score {
        session_file: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Achievable)]
        min_score_mode: ModeArg,
        #[arg(long, env = "INSTRUMENT_PATH")]
        instrument: Option<PathBuf>,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Write the analysis tables for an export stream.
    Analyze {
        export_file: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Split selection-rate tables into one column per grade.
        #[arg(long)]
        by_grade: bool,
        #[arg(long, env = "INSTRUMENT_PATH")]
        instrument: Option<PathBuf>,
    },
    /// Simulate a cohort and write it as an export stream.
    Simulate {
        /// Students per grade.
        #[arg(long)]
        students: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Cohort profile (JSON); defaults to grades 4-9 with skill rising from 0.4 to 0.9.
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Output file, `-` for standard output.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = "INSTRUMENT_PATH")]
        instrument: Option<PathBuf>,
    },
    /// Check an instrument file against the reference question counts.
    Validate {
        #[arg(long, env = "INSTRUMENT_PATH")]
        instrument: Option<PathBuf>,
    },
    /// Export sessions from a data directory.
    Export {
        #[arg(long, env = "DATA_DIR", default_value = "data")]
        data: PathBuf,
        #[arg(long)]
        grade: Option<u8>,
        /// Earliest creation time (RFC 3339).
        #[arg(long)]
        from: Option<String>,
        /// Latest creation time (RFC 3339).
        #[arg(long)]
        to: Option<String>,
        /// Output file, `-` for standard output.
        #[arg(long, default_value = "-")]
        out: PathBuf,
        #[arg(long, env = "INSTRUMENT_PATH")]
        instrument: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Achievable,
    Literal,
}

impl From<ModeArg> for MinScoreMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Achievable => MinScoreMode::Achievable,
            ModeArg::Literal => MinScoreMode::Literal,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Exit code 1.
    Domain(String),
    /// Exit code 2.
    Input(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Input(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Domain(m) | CliError::Input(m) => m,
        }
    }
}

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn domain(msg: impl Into<String>) -> CliError {
    CliError::Domain(msg.into())
}

fn io_err(path: &Path, e: io::Error) -> CliError {
    input(format!("{}: {e}", path.display()))
}

fn write_err(e: io::Error) -> CliError {
    domain(format!("write failed: {e}"))
}

pub fn load_config(path: Option<&Path>) -> Result<InstrumentConfig, CliError> {
    match path {
        None => Ok(InstrumentConfig::default_instrument()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            load_instrument(&text).map_err(|e| input(format!("{}: {e}", p.display())))
        }
    }
}

fn open_output(path: &Path) -> Result<Box<dyn Write>, CliError> {
    if path == Path::new("-") {
        Ok(Box::new(io::stdout().lock()))
    } else {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
        let f = File::create(path).map_err(|e| io_err(path, e))?;
        Ok(Box::new(io::BufWriter::new(f)))
    }
}

/// Parses and runs the command line; the result is the process exit code.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run(cli, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Serve {
            listen,
            data,
            instrument,
            admin_token,
        } => serve(listen, &data, instrument.as_deref(), admin_token),
        Command::Score {
            session_file,
            min_score_mode,
            instrument,
            json,
        } => {
            let config = load_config(instrument.as_deref())?;
            score(&config, &session_file, min_score_mode.into(), json, out)
        }
        Command::Analyze {
            export_file,
            out: dir,
            by_grade,
            instrument,
        } => {
            let config = load_config(instrument.as_deref())?;
            analyze(&config, &export_file, &dir, by_grade, out)
        }
        Command::Simulate {
            students,
            seed,
            profile,
            out: path,
            instrument,
        } => {
            let config = load_config(instrument.as_deref())?;
            simulate(&config, students, seed, profile.as_deref(), &path)
        }
        Command::Validate { instrument } => {
            let config = load_config(instrument.as_deref())?;
            validate(&config, out)
        }
        Command::Export {
            data,
            grade,
            from,
            to,
            out: path,
            instrument,
        } => {
            let config = load_config(instrument.as_deref())?;
            let parse = |field: &str, v: Option<String>| {
                v.map(|s| time::parse(&s).map_err(|e| input(format!("--{field}: {e}"))))
                    .transpose()
            };
            let filter = ExportFilter {
                grade,
                from: parse("from", from)?,
                to: parse("to", to)?,
            };
            export(config, &data, &filter, &path)
        }
    }
}

fn serve(listen: SocketAddr, data: &Path, instrument: Option<&Path>, admin_token: Option<String>) -> Result<(), CliError> {
    let config = Arc::new(load_config(instrument)?);
    let store = SessionStore::open(data, config).map_err(|e| domain(format!("{}: {e}", data.display())))?;
    let state = crate::api::AppState::new(Arc::new(store), admin_token);
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| domain(e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(listen)
            .await
            .map_err(|e| domain(format!("bind {listen}: {e}")))?;
        tracing::info!(%listen, data = %data.display(), "serving");
        axum::serve(listener, crate::api::router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| domain(e.to_string()))
    })
}

/// What a session file turned out to contain.
enum SessionInput {
    Log(Vec<GameEvent>),
    Export(Vec<SessionRecord>),
}

fn read_session_file(path: &Path) -> Result<SessionInput, CliError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut lines = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| input(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if !line.trim().is_empty() {
            lines.push((i + 1, line));
        }
    }
    let is_export = lines
        .first()
        .is_some_and(|(_, l)| serde_json::from_str::<ExportHeader>(l).is_ok());
    if is_export {
        let text: String = lines.iter().map(|(_, l)| format!("{l}\n")).collect();
        return read_export(text.as_bytes())
            .map(SessionInput::Export)
            .map_err(|e| input(format!("{}: {e}", path.display())));
    }
    let events = lines
        .into_iter()
        .map(|(n, l)| serde_json::from_str::<GameEvent>(&l).map_err(|e| input(format!("{}:{n}: {e}", path.display()))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SessionInput::Log(events))
}

#[derive(Debug, Serialize)]
struct ScoredSession {
    session_id: Option<String>,
    cells: Vec<ScoreBreakdown>,
    aggregate: Option<f64>,
    errors: Vec<String>,
}

fn score_log(config: &InstrumentConfig, events: &[GameEvent], mode: MinScoreMode) -> Result<ScoredSession, CliError> {
    let outcome = replay(config, events);
    if let Some(issue) = outcome.issues.first() {
        return Err(domain(format!("illegal log at seq={}: {}", issue.seq, issue.message)));
    }
    let settings = ctskills_core::scoring::ScoringSettings {
        min_score_mode: mode,
        ..config.scoring
    };
    let mut cells = Vec::new();
    let mut errors = Vec::new();
    for selection in outcome.selections.iter().filter(|s: &&Selection| s.attempted()) {
        match score_selection(config.spec(selection.cell()), selection, &settings) {
            Ok(r) => cells.push(r),
            Err(e) => errors.push(e.to_string()),
        }
    }
    let aggregate = aggregate_student(&cells, settings.aggregation).ok();
    Ok(ScoredSession {
        session_id: events.first().map(|e| e.session_id.to_string()),
        cells,
        aggregate,
        errors,
    })
}

fn fmt_num(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_owned() } else { s.to_owned() }
}

fn print_scored(s: &ScoredSession, out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "session {}", s.session_id.as_deref().unwrap_or("(empty)"))?;
    writeln!(out, "{:<6} {:>4} {:>6} {:>4} {:>4} {:>6} {:>5} {:>8}", "cell", "S_X", "missed", "S_Y", "opt", "raw", "min", "rescaled")?;
    for c in &s.cells {
        writeln!(
            out,
            "{:<6} {:>4} {:>6} {:>4} {:>4} {:>6} {:>5} {:>8}",
            c.cell().to_string(),
            c.selected_targets,
            c.missed_targets,
            c.selected_nontargets,
            c.selected_optional,
            c.raw_score.map(fmt_num).unwrap_or_default(),
            fmt_num(c.min_score),
            c.rescaled.map(fmt_num).unwrap_or_default(),
        )?;
    }
    for e in &s.errors {
        writeln!(out, "error  {e}")?;
    }
    match s.aggregate {
        Some(a) => writeln!(out, "aggregate {}", fmt_num(a)),
        None => writeln!(out, "aggregate none (no attempted cells)"),
    }
}

pub fn score(config: &InstrumentConfig, path: &Path, mode: MinScoreMode, json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let sessions = match read_session_file(path)? {
        SessionInput::Log(events) => vec![score_log(config, &events, mode)?],
        SessionInput::Export(records) => records
            .iter()
            .map(|r| score_log(config, &r.events, mode))
            .collect::<Result<_, _>>()?,
    };
    if json {
        let text = serde_json::to_string_pretty(&sessions).expect("scores serialize");
        writeln!(out, "{text}").map_err(write_err)?;
    } else {
        for (i, s) in sessions.iter().enumerate() {
            if i > 0 {
                writeln!(out).map_err(write_err)?;
            }
            print_scored(s, out).map_err(write_err)?;
        }
    }
    let failures: Vec<&String> = sessions.iter().flat_map(|s| &s.errors).collect();
    if let Some(first) = failures.first() {
        return Err(domain(format!("{} cell(s) could not be scored, first: {first}", failures.len())));
    }
    Ok(())
}

pub fn analyze(config: &InstrumentConfig, path: &Path, dir: &Path, by_grade: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let records = read_export(file).map_err(|e| input(format!("{}: {e}", path.display())))?;
    for r in &records {
        r.verify(config)
            .map_err(|e| domain(format!("session {}: {e}", r.session_id())))?;
    }
    let analysis = analytics::analyze(config, &records, by_grade);
    let written = write_tables(&analysis, dir).map_err(|e| domain(format!("{}: {e}", dir.display())))?;
    for p in &written {
        writeln!(out, "wrote {}", p.display()).map_err(write_err)?;
    }
    for s in &analysis.skipped {
        writeln!(out, "skipped {s}").map_err(write_err)?;
    }
    Ok(())
}

pub fn simulate(
    config: &InstrumentConfig,
    students: Option<usize>,
    seed: Option<u64>,
    profile: Option<&Path>,
    path: &Path,
) -> Result<(), CliError> {
    let mut cohort = match profile {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            serde_json::from_str::<CohortProfile>(&text).map_err(|e| input(format!("{}: {e}", p.display())))?
        }
        None => CohortProfile::linear(4..=9, 0.4, 0.9, 50, 1),
    };
    if let Some(n) = students {
        cohort.students_per_grade = n;
    }
    if let Some(s) = seed {
        cohort.seed = s;
    }
    if let Some(g) = cohort.grades.iter().find(|g| !config.grades.contains(g.grade)) {
        return Err(input(format!("grade {} is outside the instrument's grade range", g.grade)));
    }
    let records = simulate_cohort(config, &cohort).map_err(|e| domain(e.to_string()))?;
    let mut w = open_output(path)?;
    writeln!(w, "{}", ExportHeader::default().to_line()).map_err(write_err)?;
    for r in &records {
        writeln!(w, "{}", r.to_line()).map_err(write_err)?;
    }
    w.flush().map_err(write_err)
}

pub fn validate(config: &InstrumentConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let checks = config.check_reference_counts();
    let mut text = String::from("|X|/|Y|");
    for level in Level::ALL {
        text.push_str(&format!("  {:<12}", level.to_string()));
    }
    text.push('\n');
    for question in Question::ALL {
        text.push_str(&format!("{:<7}", question.to_string()));
        for level in Level::ALL {
            let c = checks
                .iter()
                .find(|c| c.cell == Cell::new(question, level))
                .expect("every cell is checked");
            let mark = if c.passed() {
                "ok".to_owned()
            } else {
                format!("!= {}/{}", c.expected.0, c.expected.1)
            };
            text.push_str(&format!("  {:<12}", format!("{}/{} {mark}", c.actual.0, c.actual.1)));
        }
        text.push('\n');
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    text.push_str(if failed == 0 { "PASS\n" } else { "FAIL\n" });
    out.write_all(text.as_bytes()).map_err(write_err)?;
    if failed > 0 {
        return Err(domain(format!("{failed} cell(s) differ from the reference counts")));
    }
    Ok(())
}

pub fn export(config: InstrumentConfig, data: &Path, filter: &ExportFilter, path: &Path) -> Result<(), CliError> {
    if !data.is_dir() {
        return Err(input(format!("{}: not a data directory", data.display())));
    }
    let store = SessionStore::open(data, Arc::new(config)).map_err(|e| domain(format!("{}: {e}", data.display())))?;
    let mut w = open_output(path)?;
    store.export_to(filter, &mut w).map_err(write_err)?;
    w.flush().map_err(write_err)
}
