//! Scoring checked against an independent brute-force scorer.

use std::collections::BTreeSet;

use ctskills_core::instrument::{Cell, Choice, InstrumentConfig, ItemPair, Level, Question, QuestionKind};
use ctskills_core::scoring::{rescale, score_selection, MinScoreMode, ScoringSettings, Selection};
use ctskills_core::time::epoch;
use proptest::prelude::*;

/// Straight from the definitions: +1 per chosen target, −1 per missed target,
/// −1 per chosen non-target, +0.5 per chosen optional target; the floor is
/// −(|X| + |Y|) and the range maps linearly onto [0, 5].
fn brute_force(targets: &BTreeSet<Choice>, optional: &BTreeSet<Choice>, y: u32, chosen: &BTreeSet<Choice>) -> (f64, f64) {
    let mut raw = 0.0;
    for t in targets {
        raw += if chosen.contains(t) { 1.0 } else { -1.0 };
    }
    for c in chosen {
        if optional.contains(c) {
            raw += 0.5;
        } else if !targets.contains(c) {
            raw -= 1.0;
        }
    }
    let x = targets.len() as f64;
    let floor = -(x + f64::from(y));
    let scaled = (5.0 * (raw - floor) / (x - floor)).clamp(0.0, 5.0);
    (raw, scaled)
}

fn at() -> ctskills_core::time::Timestamp {
    epoch(2024, 1, 1, 9)
}

#[test]
fn exhaustive_item_questions() {
    let config = InstrumentConfig::default_instrument();
    let settings = ScoringSettings::default();
    let mut checked = 0;
    for spec in config.questions().filter(|s| s.kind() == QuestionKind::ItemSelection) {
        let palette: Vec<Choice> = spec.candidate_choices();
        assert!(palette.len() <= 11);
        assert_eq!(palette.len(), spec.target_count() + spec.nontarget_count() as usize + spec.optional().len());
        for mask in 0u32..(1 << palette.len()) {
            let chosen: BTreeSet<Choice> = palette
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, c)| c.clone())
                .collect();
            let (raw, scaled) = brute_force(spec.targets(), spec.optional(), spec.nontarget_count(), &chosen);
            let sel = Selection::submitted(spec.cell(), chosen, at());
            let report = score_selection(spec, &sel, &settings).unwrap();
            assert!((report.raw_score.unwrap() - raw).abs() < 1e-9, "{} mask {mask:b}", spec.cell());
            assert!((report.rescaled.unwrap() - scaled).abs() < 1e-9, "{} mask {mask:b}", spec.cell());
            checked += 1;
        }
    }
    assert_eq!(checked, 2048 + 2048 + 256 + 2048 + 2048 + 256);
}

#[test]
fn perfect_and_all_wrong_are_exact() {
    let config = InstrumentConfig::default_instrument();
    let settings = ScoringSettings::default();
    for spec in config.questions() {
        let perfect = Selection::submitted(spec.cell(), spec.targets().iter().cloned(), at());
        assert_eq!(score_selection(spec, &perfect, &settings).unwrap().rescaled, Some(5.0), "{}", spec.cell());
        if spec.kind() == QuestionKind::ItemSelection {
            let wrong = spec.candidate_choices().into_iter().filter(|c| !spec.targets().contains(c));
            let report = score_selection(spec, &Selection::submitted(spec.cell(), wrong, at()), &settings).unwrap();
            assert_eq!(report.rescaled, Some(0.0), "{}", spec.cell());
        }
    }
}

#[test]
fn optional_pair_bonus_on_q4_level_1() {
    let config = InstrumentConfig::default_instrument();
    let cell = Cell::new(Question::Q4, Level::new(1).unwrap());
    let spec = config.spec(cell);
    let optional = spec.optional().iter().next().expect("Q4/L1 has an optional pair").clone();
    let with = Selection::submitted(cell, spec.targets().iter().cloned().chain([optional]), at());
    let report = score_selection(spec, &with, &ScoringSettings::default()).unwrap();
    assert_eq!(report.raw_score, Some(2.5));
    assert_eq!(report.rescaled, Some(5.0));
    let without = Selection::submitted(cell, spec.targets().iter().cloned(), at());
    assert_eq!(score_selection(spec, &without, &ScoringSettings::default()).unwrap().raw_score, Some(2.0));
}

fn cell_strategy() -> impl Strategy<Value = Cell> {
    (0usize..12).prop_map(|i| Cell::all().nth(i).unwrap())
}

proptest! {
    #[test]
    fn marginal_effects(cell in cell_strategy(), bits in any::<u64>()) {
        let config = InstrumentConfig::default_instrument();
        let spec = config.spec(cell);
        let settings = ScoringSettings::default();
        let candidates = spec.candidate_choices();
        let base: BTreeSet<Choice> = candidates.iter().enumerate()
            .filter(|(i, _)| bits & (1 << (i % 64)) != 0)
            .map(|(_, c)| c.clone())
            .collect();
        let raw = |set: &BTreeSet<Choice>| {
            score_selection(spec, &Selection::submitted(cell, set.iter().cloned(), at()), &settings)
                .unwrap()
                .raw_score
                .unwrap()
        };
        let r0 = raw(&base);
        for c in candidates.iter().filter(|c| !base.contains(*c)).take(6) {
            let mut more = base.clone();
            more.insert(c.clone());
            let expected = if spec.targets().contains(c) { 2.0 } else if spec.optional().contains(c) { 0.5 } else { -1.0 };
            prop_assert!((raw(&more) - r0 - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn submission_order_does_not_matter(cell in cell_strategy(), picks in prop::collection::vec(any::<prop::sample::Index>(), 0..8)) {
        let config = InstrumentConfig::default_instrument();
        let spec = config.spec(cell);
        let candidates = spec.candidate_choices();
        let chosen: Vec<Choice> = picks.iter().map(|i| candidates[i.index(candidates.len())].clone()).collect();
        let mut reversed = chosen.clone();
        reversed.reverse();
        let settings = ScoringSettings::default();
        let a = score_selection(spec, &Selection::submitted(cell, chosen, at()), &settings).unwrap();
        let b = score_selection(spec, &Selection::submitted(cell, reversed, at()), &settings).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn rescale_is_monotone_and_bounded(cell in cell_strategy(), a in -20.0f64..10.0, b in -20.0f64..10.0, literal in any::<bool>()) {
        let config = InstrumentConfig::default_instrument();
        let spec = config.spec(cell);
        let settings = ScoringSettings {
            min_score_mode: if literal { MinScoreMode::Literal } else { MinScoreMode::Achievable },
            ..ScoringSettings::default()
        };
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if let (Ok(x), Ok(y)) = (rescale(spec, lo, &settings), rescale(spec, hi, &settings)) {
            prop_assert!(x <= y);
            prop_assert!((0.0..=5.0).contains(&x) && (0.0..=5.0).contains(&y));
        }
    }

    #[test]
    fn unordered_pairs_are_symmetric(a in 0usize..6, b in 0usize..6) {
        prop_assume!(a != b);
        let items = ["apple_red", "basket_red", "grass", "tree", "score_0", "score_1"];
        let p = ItemPair::unordered(items[a], items[b]).unwrap();
        let q = ItemPair::unordered(items[b], items[a]).unwrap();
        prop_assert_eq!(p, q);
    }
}
