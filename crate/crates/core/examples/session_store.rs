//! The durable session store: create, batched appends with retries and a gap,
//! answers through `submit_answer`, restart, and an export/import round trip.
//!
//! ```text
//! cargo run -p ctskills-core --example session_store
//! ```

use std::sync::Arc;

use ctskills_core::game::LogBuilder;
use ctskills_core::instrument::{Cell, InstrumentConfig, Level, Question};
use ctskills_core::scoring::Selection;
use ctskills_core::store::{ExportFilter, Gender, NewProfile, SessionStore};
use ctskills_core::time::epoch;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = Arc::new(InstrumentConfig::default_instrument());
    let dir = tempfile::tempdir()?;
    let store = SessionStore::open(dir.path(), config.clone())?;

    let created = store.create_session(NewProfile::new(10, 5, Gender::Female, "de-CH")?)?;
    let id = created.session_id;
    println!("created {id} in {}", dir.path().display());

    let mut log = LogBuilder::new(&config, id.clone(), epoch(2024, 3, 4, 9));
    log.perfect_session();
    let events = log.finish();

    // level 1 and the first question screen arrive in two batches, the first one twice
    let screen = events.iter().position(|e| e.body.kind_name() == "question_shown").unwrap() + 1;
    println!("ack {}", store.append_events(&id, events[..5].to_vec())?);
    println!("ack {} (resent)", store.append_events(&id, events[..5].to_vec())?);
    match store.append_events(&id, events[6..screen].to_vec()) {
        Err(e) => println!("refused: {e}; resend from seq {}", e.next_seq().unwrap()),
        Ok(_) => unreachable!("seq 6 is missing"),
    }
    println!("ack {}", store.append_events(&id, events[5..screen].to_vec())?);

    // answers can also be submitted directly; the store assigns the seq
    let cell = Cell::new(Question::Q1, Level::new(1)?);
    let chosen = ["apple_red", "grass", "rock"].map(|s| ctskills_core::instrument::Choice::Item(s.parse().unwrap()));
    let (seq, breakdown) = store.submit_answer(&id, Selection::submitted(cell, chosen, epoch(2024, 3, 4, 10)), None)?;
    println!("answer stored at seq {seq}: {cell} rescaled {:.3}", breakdown.rescaled.unwrap());
    println!("next screen: {:?}", store.current_question(&id)?.map(|c| c.to_string()));

    // a restart reads everything back from disk
    drop(store);
    let store = SessionStore::open(dir.path(), config.clone())?;
    let record = store.record(&id)?;
    println!("after restart: {} events, closed: {}", record.events.len(), record.closed_at.is_some());

    let mut export = Vec::new();
    store.export_to(&ExportFilter::default(), &mut export)?;
    let other_dir = tempfile::tempdir()?;
    let other = SessionStore::open(other_dir.path(), config)?;
    let summary = other.import(export.as_slice())?;
    let mut again = Vec::new();
    other.export_to(&ExportFilter::default(), &mut again)?;
    println!(
        "imported {} session(s); re-export identical: {}",
        summary.accepted,
        export == again
    );
    print!("{}", String::from_utf8_lossy(&export).lines().next().unwrap_or_default());
    println!("  <- export header");
    Ok(())
}
