//! Scores a few hand-written answers to Q1 on level 1 and shows how the
//! raw score maps onto the 0 to 5 scale.
//!
//! ```text
//! cargo run -p ctskills-core --example score_answers
//! ```

use ctskills_core::instrument::{Cell, Choice, InstrumentConfig, Level, Question};
use ctskills_core::scoring::{aggregate_student, score_selection, MinScoreMode, ScoringSettings, Selection};
use ctskills_core::time::epoch;

fn items(names: &[&str]) -> Vec<Choice> {
    names.iter().map(|n| Choice::Item(n.parse().unwrap())).collect()
}

fn main() {
    let config = InstrumentConfig::default_instrument();
    let cell = Cell::new(Question::Q1, Level::new(1).unwrap());
    let spec = config.spec(cell);
    let at = epoch(2024, 3, 4, 9);
    let settings = ScoringSettings::default();

    let answers: [(&str, Vec<Choice>); 4] = [
        ("perfect", spec.targets().iter().cloned().collect()),
        ("two right, one distractor", items(&["apple_red", "basket_red", "rock"])),
        ("nothing ticked", vec![]),
        ("every distractor", items(&["rock", "bush", "bird", "butterfly", "mountain", "cloud"])),
    ];

    let mut reports = Vec::new();
    println!("{cell}: |X| = {}, |Y| = {}", spec.target_count(), spec.nontarget_count());
    for (label, chosen) in answers {
        let r = score_selection(spec, &Selection::submitted(cell, chosen, at), &settings).unwrap();
        println!(
            "  {label:<26} S_X={} missed={} S_Y={}  raw={:>5}  min={}  rescaled={:.3}",
            r.selected_targets,
            r.missed_targets,
            r.selected_nontargets,
            r.raw_score.unwrap(),
            r.min_score,
            r.rescaled.unwrap()
        );
        reports.push(r);
    }

    // a cell that was never submitted carries no score and is left out of the mean
    let skipped = Selection::unattempted(Cell::new(Question::Q2, Level::new(1).unwrap()), at);
    let r = score_selection(config.spec(skipped.cell()), &skipped, &settings).unwrap();
    println!("  unattempted {}: raw={:?}", r.cell(), r.raw_score);
    reports.push(r);
    println!("aggregate over attempted cells: {:.3}", aggregate_student(&reports, settings.aggregation).unwrap());

    // the optional apple/tree pair on Q4 level 1 earns a bonus that the clamp absorbs
    let q4 = Cell::new(Question::Q4, Level::new(1).unwrap());
    let spec = config.spec(q4);
    let all: Vec<Choice> = spec.targets().iter().chain(spec.optional()).cloned().collect();
    let r = score_selection(spec, &Selection::submitted(q4, all, at), &settings).unwrap();
    println!("{q4} with the optional pair: raw {} -> {}", r.raw_score.unwrap(), r.rescaled.unwrap());

    let literal = ScoringSettings {
        min_score_mode: MinScoreMode::Literal,
        ..settings
    };
    let q2 = Cell::new(Question::Q2, Level::new(1).unwrap());
    match score_selection(config.spec(q2), &Selection::submitted(q2, vec![], at), &literal) {
        Ok(r) => println!("{q2} in literal mode: {:?}", r.rescaled),
        Err(e) => println!("{q2} in literal mode: {e}"),
    }
}
