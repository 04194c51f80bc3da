//! Descriptive tables, hypothesis tests, variance components and the cohort simulator.
//!
//! Everything here is a pure function of an immutable slice of
//! [`SessionRecord`]s. Cells a student did not attempt never enter a
//! denominator.

mod describe;
pub mod distributions;
mod inference;
pub mod quadrature;
mod simulate;
mod tables;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::SessionId;
use crate::instrument::{Cell, InstrumentConfig, Level, Question};
use crate::store::{Gender, SessionRecord};

pub use describe::{
    average_by_grade, demographic_summary, score_distribution, selection_rates, ChoiceStatus, DemographicRow,
    GradeAverage, Group, RateRow, ScoreBin, ScoreHistogram, SelectionRateTable,
};
pub use inference::{
    chi_square_independence, one_way, one_way_anova, tukey_hsd, tukey_pair, variance_component, OneWay,
    StatTestResult, TestKind, VarianceComponent,
};
pub use simulate::{
    sample_answer, simulate_cohort, simulate_latent_scores, simulate_session, simulated_id, CohortProfile,
    GradeProfile, LatentScoreModel,
};
pub use tables::{selection_rates_file, write_tables, TABLE_FILES};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum StatsError {
    #[error("at least two groups are required (got {0})")]
    TooFewGroups(usize),
    #[error("group {0} is empty")]
    EmptyGroup(usize),
    #[error("{n} observations in {groups} groups leave no residual degrees of freedom")]
    NoResidualDf { n: usize, groups: usize },
    #[error("observations must be finite")]
    NonFinite,
    #[error("F is undefined: no variance between or within groups")]
    UndefinedStatistic,
    #[error("within-group variance is zero")]
    ZeroWithinVariance,
    #[error("contingency table must be at least 2x2 (got {rows}x{cols})")]
    TableTooSmall { rows: usize, cols: usize },
    #[error("contingency table rows differ in length")]
    RaggedTable,
    #[error("counts must be finite and non-negative")]
    NegativeCount,
    #[error("every row and column total must be positive")]
    ZeroMarginal,
    #[error("no factor has at least two levels")]
    NoFactor,
}

/// One rescaled score with the labels used for variance components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledScore {
    pub student: SessionId,
    pub grade: u8,
    pub question: Question,
    pub level: Level,
    pub score: f64,
}

/// Attempted cell scores of every session.
pub fn labeled_scores(sessions: &[SessionRecord]) -> Vec<LabeledScore> {
    sessions
        .iter()
        .flat_map(|r| {
            r.reports.iter().filter_map(move |rep| {
                rep.rescaled.map(|score| LabeledScore {
                    student: r.session_id().clone(),
                    grade: r.profile.grade,
                    question: rep.question,
                    level: rep.level,
                    score,
                })
            })
        })
        .collect()
}

fn grouped<K: Ord>(scores: &[LabeledScore], key: impl Fn(&LabeledScore) -> K) -> Vec<Vec<f64>> {
    let mut map: BTreeMap<K, Vec<f64>> = BTreeMap::new();
    for s in scores {
        map.entry(key(s)).or_default().push(s.score);
    }
    map.into_values().collect()
}

/// Method-of-moments components for student, question and grade.
/// Factors with fewer than two levels are left out.
pub fn variance_components(scores: &[LabeledScore]) -> Result<Vec<VarianceComponent>, StatsError> {
    let factors = [
        ("student", grouped(scores, |s| s.student.clone())),
        ("question", grouped(scores, |s| s.question)),
        ("grade", grouped(scores, |s| s.grade)),
    ];
    let out: Vec<_> = factors
        .iter()
        .filter(|(_, groups)| groups.len() >= 2)
        .filter_map(|(name, groups)| variance_component(name, groups).ok())
        .collect();
    if out.is_empty() {
        return Err(StatsError::NoFactor);
    }
    Ok(out)
}

/// Everything `analyze` writes, computed from one snapshot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Analysis {
    pub sessions: usize,
    pub selection_rates: Vec<SelectionRateTable>,
    pub score_distribution: Vec<ScoreHistogram>,
    pub average_by_grade: Vec<GradeAverage>,
    pub demographics: Vec<DemographicRow>,
    pub tests: Vec<StatTestResult>,
    pub variance_components: Vec<VarianceComponent>,
    /// Tests that could not be run, with the reason.
    pub skipped: Vec<String>,
}

fn push_test(
    tests: &mut Vec<StatTestResult>,
    skipped: &mut Vec<String>,
    label: &str,
    result: Result<StatTestResult, StatsError>,
) {
    match result {
        Ok(r) => tests.push(r.with_label(label)),
        Err(e) => skipped.push(format!("{label}: {e}")),
    }
}

/// Contingency table of group × rounded rescaled score, dropping empty columns.
fn score_table<K: Ord>(scores: &[LabeledScore], key: impl Fn(&LabeledScore) -> K) -> Vec<Vec<f64>> {
    let mut counts: BTreeMap<K, BTreeMap<i64, f64>> = BTreeMap::new();
    let mut columns = std::collections::BTreeSet::new();
    for s in scores {
        let bin = s.score.round() as i64;
        columns.insert(bin);
        *counts.entry(key(s)).or_default().entry(bin).or_default() += 1.0;
    }
    counts
        .values()
        .map(|row| columns.iter().map(|c| row.get(c).copied().unwrap_or(0.0)).collect())
        .collect()
}

pub fn analyze(config: &InstrumentConfig, sessions: &[SessionRecord], by_grade: bool) -> Analysis {
    let selection_rates = Cell::all()
        .map(|cell| selection_rates(config, sessions, cell, by_grade))
        .collect();
    let scores = labeled_scores(sessions);
    let mut tests = Vec::new();
    let mut skipped = Vec::new();

    let mut by_grade_agg: BTreeMap<u8, Vec<f64>> = BTreeMap::new();
    let mut by_gender: BTreeMap<Gender, Vec<f64>> = BTreeMap::new();
    for r in sessions {
        if let Some(a) = r.aggregate {
            by_grade_agg.entry(r.profile.grade).or_default().push(a);
            by_gender.entry(r.profile.gender).or_default().push(a);
        }
    }
    let grade_groups: Vec<Vec<f64>> = by_grade_agg.values().cloned().collect();
    push_test(&mut tests, &mut skipped, "grade", one_way_anova(&grade_groups));

    let mut per_question: BTreeMap<(Question, &SessionId), Vec<f64>> = BTreeMap::new();
    for s in &scores {
        per_question.entry((s.question, &s.student)).or_default().push(s.score);
    }
    let mut question_groups: BTreeMap<Question, Vec<f64>> = BTreeMap::new();
    for ((q, _), v) in &per_question {
        question_groups
            .entry(*q)
            .or_default()
            .push(v.iter().sum::<f64>() / v.len() as f64);
    }
    let question_groups: Vec<Vec<f64>> = question_groups.into_values().collect();
    push_test(&mut tests, &mut skipped, "question", one_way_anova(&question_groups));

    let gender_groups: Vec<Vec<f64>> = by_gender.into_values().collect();
    push_test(&mut tests, &mut skipped, "gender", one_way_anova(&gender_groups));

    push_test(
        &mut tests,
        &mut skipped,
        "grade x score",
        chi_square_independence(&score_table(&scores, |s| s.grade), false),
    );
    push_test(
        &mut tests,
        &mut skipped,
        "question x score",
        chi_square_independence(&score_table(&scores, |s| s.question), false),
    );
    let gender_of: BTreeMap<&SessionId, Gender> = sessions.iter().map(|r| (r.session_id(), r.profile.gender)).collect();
    push_test(
        &mut tests,
        &mut skipped,
        "gender x score",
        chi_square_independence(&score_table(&scores, |s| gender_of[&s.student]), false),
    );

    let names: Vec<String> = by_grade_agg.keys().map(|g| format!("grade {g}")).collect();
    match tukey_hsd(&grade_groups, Some(&names)) {
        Ok(pairs) => tests.extend(pairs),
        Err(e) => skipped.push(format!("tukey grade: {e}")),
    }

    let variance_components = match variance_components(&scores) {
        Ok(v) => v,
        Err(e) => {
            skipped.push(format!("variance components: {e}"));
            Vec::new()
        }
    };
    tests.extend(variance_components.iter().map(VarianceComponent::to_result));

    Analysis {
        sessions: sessions.len(),
        selection_rates,
        score_distribution: score_distribution(sessions),
        average_by_grade: average_by_grade(sessions),
        demographics: demographic_summary(sessions),
        tests,
        variance_components,
        skipped,
    }
}
