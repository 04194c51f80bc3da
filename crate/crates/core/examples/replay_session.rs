//! Builds a session log, applies it event by event and replays a damaged copy.
//!
//! ```text
//! cargo run -p ctskills-core --example replay_session
//! ```

use ctskills_core::game::{replay, Effect, LogBuilder, SessionId, SessionMachine};
use ctskills_core::instrument::{DropZone, InstrumentConfig, Level, ObjectRole};
use ctskills_core::time::epoch;

fn main() {
    let config = InstrumentConfig::default_instrument();
    let id = SessionId::new("demo-01").unwrap();
    let level1 = Level::new(1).unwrap();
    let scenery = config.scenery(level1);

    // one apple is dropped in the wrong place first, then the level is played properly
    let apples: Vec<_> = scenery.instances().filter(|i| i.role == ObjectRole::Apple).collect();
    let mut log = LogBuilder::new(&config, id, epoch(2024, 3, 4, 9));
    log.session_started().level_started(level1).drag(level1, &apples[0].id, DropZone::Other);
    for apple in &apples {
        log.drag(level1, &apple.id, apple.basket.unwrap_or(DropZone::Grass));
    }
    log.level_completed(level1).answer_level_with_targets(level1);
    for level in &Level::ALL[1..] {
        log.play_level_cleanly(*level).answer_level_with_targets(*level);
    }
    let events = log.finish();

    let mut machine = SessionMachine::new();
    for event in &events {
        let effects = machine.apply(&config, event).expect("the log is legal");
        for effect in effects {
            match effect {
                Effect::ReturnedHome { instance } => println!("seq {:>3}: {instance} snapped back", event.seq),
                Effect::ScoreChanged { score } if event.seq < 12 => println!("seq {:>3}: score {score}", event.seq),
                Effect::LevelResolved { level } => println!("seq {:>3}: level {level} resolved", event.seq),
                _ => {}
            }
        }
    }
    for (level, state) in machine.levels() {
        let ok = state.invariants_hold(config.scenery(*level));
        println!("level {level}: score {} completed {} invariants {}", state.score, state.completed, ok);
    }
    println!("finished: {}, {} answers recorded", machine.is_finished(), machine.selections().len());

    // replay is a pure function of the log
    let clean = replay(&config, &events);
    assert_eq!(clean, replay(&config, &events));
    println!("replay of the full log: {} issues", clean.issues.len());

    let mut damaged = events.clone();
    damaged.remove(7);
    let report = replay(&config, &damaged);
    for issue in report.issues.iter().take(3) {
        println!("damaged log: seq {}: {}", issue.seq, issue.message);
    }
}
