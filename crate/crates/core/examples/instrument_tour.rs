//! Walks the built-in instrument: sceneries, question screens and the
//! reference (|X|, |Y|) matrix.
//!
//! ```text
//! cargo run -p ctskills-core --example instrument_tour
//! ```

use ctskills_core::instrument::{InstrumentConfig, QuestionKind};

fn main() {
    let config = InstrumentConfig::default_instrument();

    for scenery in config.sceneries() {
        let instances = scenery.instances().count();
        println!("level {} ({:?}): {instances} objects", scenery.level, scenery.mode);
    }
    println!();

    for spec in config.questions() {
        let kind = match spec.kind() {
            QuestionKind::ItemSelection => "items",
            QuestionKind::OrderedPairSelection => "ordered pairs",
            QuestionKind::UnorderedPairSelection => "unordered pairs",
        };
        let targets: Vec<String> = spec.targets().iter().map(|c| c.to_string()).collect();
        println!(
            "{:<6} {kind:<16} |X|={} |Y|={:<2} targets: {}",
            spec.cell().to_string(),
            spec.target_count(),
            spec.nontarget_count(),
            targets.join(", ")
        );
        if !spec.optional().is_empty() {
            let optional: Vec<String> = spec.optional().iter().map(|c| c.to_string()).collect();
            println!("{:<23} optional: {}", "", optional.join(", "));
        }
    }
    println!();

    let failed = config.check_reference_counts().iter().filter(|c| !c.passed()).count();
    println!("reference counts: {}", if failed == 0 { "all twelve match" } else { "MISMATCH" });

    // what a tablet receives: palettes and text keys, never the answers
    let doc = config.client_document();
    let first = &doc.questions[0];
    println!(
        "client document: {} questions, {} pair slots, first screen {} ({} palette items)",
        doc.questions.len(),
        doc.pair_slots,
        first.text_key,
        first.palette.len()
    );
}
