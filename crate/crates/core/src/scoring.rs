//! Selection scoring.
//!
//! A submission is partitioned into selected targets `S_X`, selected optional
//! targets and selected non-targets `S_Y`. The raw score is
//! `|S_X| - (|X| - |S_X|) - |S_Y| + 0.5 * |S_opt|`, which is then mapped onto
//! `[0, max_scaled]` relative to the minimum achievable score.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instrument::{Cell, Choice, InstrumentError, Level, Question, QuestionSpec, RawChoice};
use crate::time::{self, Timestamp};

/// Bonus per selected optional target.
pub const OPTIONAL_BONUS: f64 = 0.5;

/// Absolute tolerance for comparing scores.
pub const SCORE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ScoringError {
    #[error("{cell}: {choice} does not match the question kind")]
    KindMismatch { cell: Cell, choice: String },
    #[error("{cell}: {choice} is not on the palette")]
    OffPalette { cell: Cell, choice: String },
    #[error("selection for {selection} scored against spec for {spec}")]
    CellMismatch { selection: Cell, spec: Cell },
    #[error("{cell}: rescale range is empty (|X| - min_score = {span})")]
    DegenerateRange { cell: Cell, span: f64 },
    #[error("no score assignable: no attempted cells")]
    NoAttempt,
}

/// How the lower end of the rescale range is computed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinScoreMode {
    /// `-(|X| + |Y|)`: no targets and every non-target selected.
    #[default]
    Achievable,
    /// `-|X| + |Y|`, the formula exactly as typeset.
    Literal,
}

/// How per-cell scores combine into a student's aggregate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMode {
    /// Mean over every attempted cell.
    #[default]
    Flat,
    /// Mean over levels within each question, then over questions.
    PerQuestion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoringSettings {
    pub max_scaled: f64,
    pub min_score_mode: MinScoreMode,
    pub aggregation: AggregationMode,
}

impl Default for ScoringSettings {
    fn default() -> Self {
        Self {
            max_scaled: 5.0,
            min_score_mode: MinScoreMode::Achievable,
            aggregation: AggregationMode::Flat,
        }
    }
}

/// A student's submission for one (question, level).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSelection", into = "RawSelection")]
pub struct Selection {
    cell: Cell,
    chosen: BTreeSet<Choice>,
    attempted: bool,
    submitted_at: Timestamp,
}

impl Selection {
    /// An attempted submission. Duplicate choices collapse.
    pub fn submitted(
        cell: Cell,
        chosen: impl IntoIterator<Item = Choice>,
        submitted_at: Timestamp,
    ) -> Self {
        Self {
            cell,
            chosen: chosen.into_iter().collect(),
            attempted: true,
            submitted_at: time::truncate_ms(submitted_at),
        }
    }

    /// Placeholder for a cell the student never submitted.
    pub fn unattempted(cell: Cell, at: Timestamp) -> Self {
        Self {
            cell,
            chosen: BTreeSet::new(),
            attempted: false,
            submitted_at: time::truncate_ms(at),
        }
    }

    pub fn cell(&self) -> Cell {
        self.cell
    }

    pub fn question(&self) -> Question {
        self.cell.question
    }

    pub fn level(&self) -> Level {
        self.cell.level
    }

    pub fn chosen(&self) -> &BTreeSet<Choice> {
        &self.chosen
    }

    pub fn attempted(&self) -> bool {
        self.attempted
    }

    pub fn submitted_at(&self) -> Timestamp {
        self.submitted_at
    }
}

/// Wire form of a [`Selection`]; pairs are two-element arrays whose ordering
/// semantics follow the question.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawSelection {
    pub question: Question,
    pub level: Level,
    pub chosen: Vec<RawChoice>,
    pub attempted: bool,
    #[serde(with = "time::serde_ms")]
    pub submitted_at: Timestamp,
}

impl TryFrom<RawSelection> for Selection {
    type Error = InstrumentError;

    fn try_from(raw: RawSelection) -> Result<Self, Self::Error> {
        let cell = Cell::new(raw.question, raw.level);
        let kind = raw.question.kind();
        let chosen = raw
            .chosen
            .into_iter()
            .map(|c| Choice::from_raw(c, kind))
            .collect::<Result<BTreeSet<_>, _>>()?;
        if !raw.attempted && !chosen.is_empty() {
            return Err(InstrumentError::InvalidSpec {
                cell,
                reason: "unattempted selection carries choices".into(),
            });
        }
        Ok(Selection {
            cell,
            chosen,
            attempted: raw.attempted,
            submitted_at: raw.submitted_at,
        })
    }
}

impl From<Selection> for RawSelection {
    fn from(s: Selection) -> Self {
        RawSelection {
            question: s.cell.question,
            level: s.cell.level,
            chosen: s.chosen.iter().map(Choice::to_raw).collect(),
            attempted: s.attempted,
            submitted_at: s.submitted_at,
        }
    }
}

/// A submission split into selected targets, optional targets and non-targets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Classified {
    pub targets: BTreeSet<Choice>,
    pub optional: BTreeSet<Choice>,
    pub nontargets: BTreeSet<Choice>,
}

pub fn classify<'a>(
    spec: &QuestionSpec,
    chosen: impl IntoIterator<Item = &'a Choice>,
) -> Result<Classified, ScoringError> {
    let cell = spec.cell();
    let mut out = Classified::default();
    for choice in chosen {
        if !choice.kind_matches(spec.kind()) {
            return Err(ScoringError::KindMismatch {
                cell,
                choice: choice.to_string(),
            });
        }
        if choice.items().any(|id| !spec.palette().contains(id)) {
            return Err(ScoringError::OffPalette {
                cell,
                choice: choice.to_string(),
            });
        }
        let bucket = if spec.targets().contains(choice) {
            &mut out.targets
        } else if spec.optional().contains(choice) {
            &mut out.optional
        } else {
            &mut out.nontargets
        };
        bucket.insert(choice.clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub question: Question,
    pub level: Level,
    pub attempted: bool,
    /// |S_X|
    pub selected_targets: u32,
    /// |X| - |S_X|
    pub missed_targets: u32,
    /// |S_Y|
    pub selected_nontargets: u32,
    pub selected_optional: u32,
    pub bonus: f64,
    /// Absent when the cell was not attempted.
    pub raw_score: Option<f64>,
    pub min_score: f64,
    /// Absent when the cell was not attempted.
    pub rescaled: Option<f64>,
}

impl ScoreBreakdown {
    pub fn cell(&self) -> Cell {
        Cell::new(self.question, self.level)
    }
}

/// Minimum score used as the bottom of the rescale range.
pub fn min_score(spec: &QuestionSpec, mode: MinScoreMode) -> f64 {
    let x = spec.target_count() as f64;
    let y = f64::from(spec.nontarget_count());
    match mode {
        MinScoreMode::Achievable => -(x + y),
        MinScoreMode::Literal => -x + y,
    }
}

/// Maps a raw score to `[0, max_scaled]`, clamping bonus overshoot and pair over-selection.
pub fn rescale(spec: &QuestionSpec, raw: f64, settings: &ScoringSettings) -> Result<f64, ScoringError> {
    let min = min_score(spec, settings.min_score_mode);
    let span = spec.target_count() as f64 - min;
    if span <= 0.0 {
        return Err(ScoringError::DegenerateRange {
            cell: spec.cell(),
            span,
        });
    }
    let scaled = settings.max_scaled * (raw - min) / span;
    Ok(scaled.clamp(0.0, settings.max_scaled))
}

pub fn score_selection(
    spec: &QuestionSpec,
    selection: &Selection,
    settings: &ScoringSettings,
) -> Result<ScoreBreakdown, ScoringError> {
    if spec.cell() != selection.cell() {
        return Err(ScoringError::CellMismatch {
            selection: selection.cell(),
            spec: spec.cell(),
        });
    }
    let min = min_score(spec, settings.min_score_mode);
    if !selection.attempted() {
        return Ok(ScoreBreakdown {
            question: spec.question(),
            level: spec.level(),
            attempted: false,
            selected_targets: 0,
            missed_targets: 0,
            selected_nontargets: 0,
            selected_optional: 0,
            bonus: 0.0,
            raw_score: None,
            min_score: min,
            rescaled: None,
        });
    }

    let parts = classify(spec, selection.chosen())?;
    let selected = parts.targets.len() as u32;
    let missed = spec.target_count() as u32 - selected;
    let wrong = parts.nontargets.len() as u32;
    let optional = parts.optional.len() as u32;
    let bonus = OPTIONAL_BONUS * f64::from(optional);
    let raw = f64::from(selected) - f64::from(missed) - f64::from(wrong) + bonus;
    let rescaled = rescale(spec, raw, settings)?;

    Ok(ScoreBreakdown {
        question: spec.question(),
        level: spec.level(),
        attempted: true,
        selected_targets: selected,
        missed_targets: missed,
        selected_nontargets: wrong,
        selected_optional: optional,
        bonus,
        raw_score: Some(raw),
        min_score: min,
        rescaled: Some(rescaled),
    })
}

/// Final per-student score: the mean rescaled score over attempted cells.
pub fn aggregate_student(reports: &[ScoreBreakdown], mode: AggregationMode) -> Result<f64, ScoringError> {
    let attempted: Vec<&ScoreBreakdown> = reports.iter().filter(|r| r.attempted).collect();
    if attempted.is_empty() {
        return Err(ScoringError::NoAttempt);
    }
    let value = |r: &ScoreBreakdown| r.rescaled.unwrap_or_default();
    match mode {
        AggregationMode::Flat => Ok(mean(attempted.iter().map(|r| value(r)))),
        AggregationMode::PerQuestion => {
            let per_question: Vec<f64> = Question::ALL
                .into_iter()
                .filter_map(|q| {
                    let scores: Vec<f64> = attempted
                        .iter()
                        .filter(|r| r.question == q)
                        .map(|r| value(r))
                        .collect();
                    (!scores.is_empty()).then(|| mean(scores))
                })
                .collect();
            Ok(mean(per_question))
        }
    }
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instrument::{InstrumentConfig, ItemPair};

    fn config() -> InstrumentConfig {
        InstrumentConfig::default_instrument()
    }

    fn at() -> Timestamp {
        time::epoch(2024, 3, 5, 9)
    }

    fn items(ids: &[&str]) -> Vec<Choice> {
        ids.iter().map(|s| Choice::Item(s.parse().unwrap())).collect()
    }

    fn pairs(ps: &[(&str, &str)]) -> Vec<Choice> {
        ps.iter()
            .map(|(a, b)| Choice::Pair(ItemPair::unordered(a, b).unwrap()))
            .collect()
    }

    const Q1L1_TARGETS: [&str; 5] = ["apple_red", "basket_red", "score", "apple_spoiled_red", "grass"];

    fn score(q: Question, level: u8, chosen: Vec<Choice>) -> ScoreBreakdown {
        let config = config();
        let spec = config.spec_for(q, level).unwrap();
        let sel = Selection::submitted(spec.cell(), chosen, at());
        score_selection(spec, &sel, &config.scoring).unwrap()
    }

    #[test]
    fn classify_q1_l1_targets_plus_rock() {
        let config = config();
        let spec = config.spec_for(Question::Q1, 1).unwrap();
        let mut chosen = items(&Q1L1_TARGETS);
        chosen.extend(items(&["rock"]));
        let parts = classify(spec, &chosen).unwrap();
        assert_eq!((parts.targets.len(), parts.optional.len(), parts.nontargets.len()), (5, 0, 1));
    }

    #[test]
    fn classify_optional_pair() {
        let config = config();
        let spec = config.spec_for(Question::Q4, 1).unwrap();
        let chosen = pairs(&[("apple_spoiled_red", "grass")]);
        let parts = classify(spec, &chosen).unwrap();
        assert_eq!((parts.targets.len(), parts.optional.len(), parts.nontargets.len()), (0, 1, 0));
    }

    #[test]
    fn classify_empty() {
        let config = config();
        for spec in config.questions() {
            assert_eq!(classify(spec, &[]).unwrap(), Classified::default());
        }
    }

    #[test]
    fn classify_rejects_kind_mismatch() {
        let config = config();
        let spec = config.spec_for(Question::Q3, 1).unwrap();
        let err = classify(spec, &items(&["apple_red"])).unwrap_err();
        assert!(matches!(err, ScoringError::KindMismatch { .. }));
        // an unordered pair is not a Q3 answer either
        let err = classify(spec, &pairs(&[("apple_red", "apple_spoiled_red")])).unwrap_err();
        assert!(matches!(err, ScoringError::KindMismatch { .. }));
    }

    #[test]
    fn classify_rejects_off_palette_items() {
        let config = config();
        let spec = config.spec_for(Question::Q1, 1).unwrap();
        let err = classify(spec, &items(&["leaf_dark"])).unwrap_err();
        assert!(matches!(err, ScoringError::OffPalette { .. }));
    }

    #[test]
    fn perfect_q1_l1() {
        let r = score(Question::Q1, 1, items(&Q1L1_TARGETS));
        assert_eq!(r.raw_score, Some(5.0));
        assert_eq!(r.min_score, -11.0);
        assert_eq!(r.rescaled, Some(5.0));
    }

    #[test]
    fn empty_attempt_q1_l1() {
        let r = score(Question::Q1, 1, vec![]);
        assert_eq!(r.raw_score, Some(-5.0));
        assert!((r.rescaled.unwrap() - 1.875).abs() < SCORE_TOLERANCE);
    }

    #[test]
    fn three_targets_two_nontargets_q1_l1() {
        let mut chosen = items(&Q1L1_TARGETS[..3]);
        chosen.extend(items(&["rock", "cloud"]));
        let r = score(Question::Q1, 1, chosen);
        assert_eq!(r.raw_score, Some(-1.0));
        assert!((r.rescaled.unwrap() - 3.125).abs() < SCORE_TOLERANCE);
    }

    #[test]
    fn optional_bonus_clamps_at_max() {
        let r = score(
            Question::Q4,
            1,
            pairs(&[("apple_red", "basket_red"), ("apple_red", "grass"), ("apple_spoiled_red", "grass")]),
        );
        assert_eq!(r.raw_score, Some(2.5));
        assert_eq!(r.bonus, 0.5);
        assert_eq!(r.rescaled, Some(5.0));

        let r = score(Question::Q4, 1, pairs(&[("apple_red", "basket_red"), ("apple_red", "grass")]));
        assert_eq!(r.raw_score, Some(2.0));
        assert_eq!(r.rescaled, Some(5.0));
    }

    #[test]
    fn pair_over_selection_clamps_at_zero() {
        let r = score(
            Question::Q4,
            1,
            pairs(&[
                ("tree", "grass"),
                ("tree", "basket_red"),
                ("score_0", "grass"),
                ("score_1", "grass"),
                ("score_0", "tree"),
                ("score_1", "tree"),
            ]),
        );
        assert_eq!(r.selected_nontargets, 6);
        assert_eq!(r.raw_score, Some(-8.0));
        assert_eq!(r.rescaled, Some(0.0));
    }

    #[test]
    fn unattempted_cell_has_no_score() {
        let config = config();
        let spec = config.spec_for(Question::Q2, 2).unwrap();
        let sel = Selection::unattempted(spec.cell(), at());
        let r = score_selection(spec, &sel, &config.scoring).unwrap();
        assert!(!r.attempted);
        assert_eq!(r.rescaled, None);
        assert_eq!(r.raw_score, None);
    }

    #[test]
    fn cell_mismatch_rejected() {
        let config = config();
        let spec = config.spec_for(Question::Q2, 2).unwrap();
        let other = config.spec_for(Question::Q1, 2).unwrap();
        let sel = Selection::submitted(other.cell(), vec![], at());
        assert!(matches!(
            score_selection(spec, &sel, &config.scoring),
            Err(ScoringError::CellMismatch { .. })
        ));
    }

    #[test]
    fn literal_min_score_mode() {
        let config = config();
        let settings = ScoringSettings {
            min_score_mode: MinScoreMode::Literal,
            ..config.scoring
        };
        let spec = config.spec_for(Question::Q1, 1).unwrap();
        assert_eq!(min_score(spec, MinScoreMode::Literal), 1.0);
        let sel = Selection::submitted(spec.cell(), items(&Q1L1_TARGETS[..3]), at());
        // raw = 3 - 2 = 1 sits exactly on the literal minimum
        let r = score_selection(spec, &sel, &settings).unwrap();
        assert_eq!(r.rescaled, Some(0.0));

        // Q2/L1: -1 + 10 = 9 exceeds |X| = 1, leaving no range to map onto
        let spec = config.spec_for(Question::Q2, 1).unwrap();
        let sel = Selection::submitted(spec.cell(), vec![], at());
        assert!(matches!(
            score_selection(spec, &sel, &settings),
            Err(ScoringError::DegenerateRange { .. })
        ));
    }

    fn report(q: Question, level: u8, rescaled: Option<f64>) -> ScoreBreakdown {
        ScoreBreakdown {
            question: q,
            level: Level::new(level).unwrap(),
            attempted: rescaled.is_some(),
            selected_targets: 0,
            missed_targets: 0,
            selected_nontargets: 0,
            selected_optional: 0,
            bonus: 0.0,
            raw_score: rescaled,
            min_score: 0.0,
            rescaled,
        }
    }

    #[test]
    fn aggregate_over_attempted_cells_only() {
        let mut reports: Vec<ScoreBreakdown> = Cell::all()
            .map(|c| report(c.question, c.level.number(), None))
            .collect();
        reports[0].attempted = true;
        for (i, v) in [5.0, 3.0, 4.0, 4.0].into_iter().enumerate() {
            reports[i] = report(reports[i].question, reports[i].level.number(), Some(v));
        }
        assert_eq!(aggregate_student(&reports, AggregationMode::Flat), Ok(4.0));
    }

    #[test]
    fn aggregate_constant_and_two_point() {
        let all: Vec<ScoreBreakdown> = Cell::all()
            .map(|c| report(c.question, c.level.number(), Some(5.0)))
            .collect();
        assert_eq!(aggregate_student(&all, AggregationMode::Flat), Ok(5.0));
        assert_eq!(aggregate_student(&all, AggregationMode::PerQuestion), Ok(5.0));
        let two = [report(Question::Q1, 1, Some(5.0)), report(Question::Q2, 1, Some(0.0))];
        assert_eq!(aggregate_student(&two, AggregationMode::Flat), Ok(2.5));
    }

    #[test]
    fn aggregate_requires_an_attempt() {
        let none = [report(Question::Q1, 1, None)];
        assert_eq!(aggregate_student(&none, AggregationMode::Flat), Err(ScoringError::NoAttempt));
        assert_eq!(aggregate_student(&[], AggregationMode::Flat), Err(ScoringError::NoAttempt));
    }

    #[test]
    fn per_question_mode_weights_questions_equally() {
        let reports = [
            report(Question::Q1, 1, Some(5.0)),
            report(Question::Q1, 2, Some(5.0)),
            report(Question::Q1, 3, Some(5.0)),
            report(Question::Q2, 1, Some(2.0)),
        ];
        assert_eq!(aggregate_student(&reports, AggregationMode::Flat), Ok(4.25));
        assert_eq!(aggregate_student(&reports, AggregationMode::PerQuestion), Ok(3.5));
    }

    #[test]
    fn selection_wire_form_canonicalises_unordered_pairs() {
        let json = r#"{"question":"Q4","level":1,"chosen":[["grass","apple_red"],["apple_red","grass"]],
            "attempted":true,"submitted_at":"2024-03-05T09:00:00.250Z"}"#;
        let sel: Selection = serde_json::from_str(json).unwrap();
        assert_eq!(sel.chosen().len(), 1);
        let back = serde_json::to_string(&sel).unwrap();
        assert!(back.contains(r#"["apple_red","grass"]"#), "{back}");
    }

    #[test]
    fn unattempted_selection_must_be_empty() {
        let json = r#"{"question":"Q1","level":1,"chosen":["rock"],"attempted":false,
            "submitted_at":"2024-03-05T09:00:00.000Z"}"#;
        assert!(serde_json::from_str::<Selection>(json).is_err());
    }
}
