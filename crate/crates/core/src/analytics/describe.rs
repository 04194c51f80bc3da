use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::instrument::{Cell, Choice, InstrumentConfig, Level, Question};
use crate::store::{Gender, SessionRecord, StudentProfile};

/// Column grouping for rate tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    All,
    Grade(u8),
}

impl std::fmt::Display for Group {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Group::All => f.write_str("all"),
            Group::Grade(g) => write!(f, "grade_{g}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChoiceStatus {
    Target,
    Optional,
    NonTarget,
}

impl ChoiceStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ChoiceStatus::Target => "target",
            ChoiceStatus::Optional => "optional",
            ChoiceStatus::NonTarget => "non_target",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub choice: Choice,
    pub status: ChoiceStatus,
    /// Percent of attempted sessions per group, in [`SelectionRateTable::groups`] order.
    pub rates: Vec<f64>,
}

/// How often each palette element was chosen for one cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionRateTable {
    pub cell: Cell,
    pub groups: Vec<Group>,
    /// Attempted sessions per group: the denominators.
    pub attempted: Vec<usize>,
    pub rows: Vec<RateRow>,
}

impl SelectionRateTable {
    /// True when no session attempted the cell; `rows` is then empty.
    pub fn is_empty(&self) -> bool {
        self.attempted.iter().all(|n| *n == 0)
    }

    pub fn row(&self, choice: &Choice) -> Option<&RateRow> {
        self.rows.iter().find(|r| &r.choice == choice)
    }
}

fn attempted_selection(record: &SessionRecord, cell: Cell) -> Option<&crate::scoring::Selection> {
    record
        .selections
        .iter()
        .find(|s| s.cell() == cell && s.attempted())
}

pub fn selection_rates(
    config: &InstrumentConfig,
    sessions: &[SessionRecord],
    cell: Cell,
    by_grade: bool,
) -> SelectionRateTable {
    let spec = config.spec(cell);
    let group_of = |r: &SessionRecord| if by_grade { Group::Grade(r.profile.grade) } else { Group::All };
    let mut per_group: BTreeMap<Group, Vec<&crate::scoring::Selection>> = BTreeMap::new();
    for record in sessions {
        if let Some(sel) = attempted_selection(record, cell) {
            per_group.entry(group_of(record)).or_default().push(sel);
        }
    }
    let groups: Vec<Group> = if per_group.is_empty() && !by_grade {
        vec![Group::All]
    } else {
        per_group.keys().copied().collect()
    };
    let attempted: Vec<usize> = groups
        .iter()
        .map(|g| per_group.get(g).map_or(0, Vec::len))
        .collect();
    if per_group.is_empty() {
        return SelectionRateTable {
            cell,
            groups,
            attempted,
            rows: Vec::new(),
        };
    }
    let rows = spec
        .candidate_choices()
        .into_iter()
        .map(|choice| {
            let status = if spec.targets().contains(&choice) {
                ChoiceStatus::Target
            } else if spec.optional().contains(&choice) {
                ChoiceStatus::Optional
            } else {
                ChoiceStatus::NonTarget
            };
            let rates = groups
                .iter()
                .map(|g| {
                    let sels = &per_group[g];
                    let hits = sels.iter().filter(|s| s.chosen().contains(&choice)).count();
                    100.0 * hits as f64 / sels.len() as f64
                })
                .collect();
            RateRow { choice, status, rates }
        })
        .collect();
    SelectionRateTable {
        cell,
        groups,
        attempted,
        rows,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreBin {
    pub score: f64,
    pub count: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreHistogram {
    pub cell: Cell,
    pub attempted: usize,
    pub bins: Vec<ScoreBin>,
}

/// Rescaled scores are rounded to this many decimals before binning.
const BIN_DECIMALS: i32 = 6;

fn bin_key(score: f64) -> i64 {
    (score * 10f64.powi(BIN_DECIMALS)).round() as i64
}

fn rescaled_scores(sessions: &[SessionRecord], cell: Cell) -> impl Iterator<Item = f64> + '_ {
    sessions
        .iter()
        .filter_map(move |r| r.report(cell).and_then(|rep| rep.rescaled))
}

/// Per cell, the distinct rescaled scores with counts and percentages of attempted sessions.
pub fn score_distribution(sessions: &[SessionRecord]) -> Vec<ScoreHistogram> {
    Cell::all()
        .map(|cell| {
            let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
            for score in rescaled_scores(sessions, cell) {
                *counts.entry(bin_key(score)).or_default() += 1;
            }
            let attempted: usize = counts.values().sum();
            let bins = counts
                .into_iter()
                .map(|(key, count)| ScoreBin {
                    score: key as f64 / 10f64.powi(BIN_DECIMALS),
                    count,
                    percent: 100.0 * count as f64 / attempted as f64,
                })
                .collect();
            ScoreHistogram { cell, attempted, bins }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeAverage {
    pub grade: u8,
    /// `None` for the per-student aggregate over all questions.
    pub question: Option<Question>,
    pub students: usize,
    pub scores: usize,
    pub mean: f64,
}

/// Mean rescaled score per (grade, question) across levels, then one overall
/// row per grade averaging the students' aggregates.
pub fn average_by_grade(sessions: &[SessionRecord]) -> Vec<GradeAverage> {
    let mut by_grade: BTreeMap<u8, Vec<&SessionRecord>> = BTreeMap::new();
    for r in sessions {
        by_grade.entry(r.profile.grade).or_default().push(r);
    }
    let mut out = Vec::new();
    for (grade, records) in by_grade {
        for question in Question::ALL {
            let mut scores = Vec::new();
            let mut students = 0;
            for r in &records {
                let before = scores.len();
                scores.extend(
                    Level::ALL
                        .iter()
                        .filter_map(|&level| r.report(Cell::new(question, level)).and_then(|rep| rep.rescaled)),
                );
                students += usize::from(scores.len() > before);
            }
            if !scores.is_empty() {
                out.push(GradeAverage {
                    grade,
                    question: Some(question),
                    students,
                    scores: scores.len(),
                    mean: scores.iter().sum::<f64>() / scores.len() as f64,
                });
            }
        }
        let aggregates: Vec<f64> = records.iter().filter_map(|r| r.aggregate).collect();
        if !aggregates.is_empty() {
            out.push(GradeAverage {
                grade,
                question: None,
                students: aggregates.len(),
                scores: aggregates.len(),
                mean: aggregates.iter().sum::<f64>() / aggregates.len() as f64,
            });
        }
    }
    out
}

/// One demographics row: counts, age range, mean ± SD and counts by gender.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemographicRow {
    pub group: Group,
    pub students: usize,
    pub age_min: u8,
    pub age_max: u8,
    pub age_mean: f64,
    /// Sample standard deviation; 0 for a single student.
    pub age_sd: f64,
    pub female: usize,
    pub male: usize,
    pub other: usize,
    pub undisclosed: usize,
}

impl DemographicRow {
    pub fn from_profiles<'a>(group: Group, profiles: impl IntoIterator<Item = &'a StudentProfile>) -> Option<Self> {
        let profiles: Vec<_> = profiles.into_iter().collect();
        let n = profiles.len();
        if n == 0 {
            return None;
        }
        let ages: Vec<f64> = profiles.iter().map(|p| f64::from(p.age)).collect();
        let mean = ages.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (ages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let count = |g: Gender| profiles.iter().filter(|p| p.gender == g).count();
        Some(Self {
            group,
            students: n,
            age_min: profiles.iter().map(|p| p.age).min().unwrap_or(0),
            age_max: profiles.iter().map(|p| p.age).max().unwrap_or(0),
            age_mean: mean,
            age_sd: sd,
            female: count(Gender::Female),
            male: count(Gender::Male),
            other: count(Gender::Other),
            undisclosed: count(Gender::Undisclosed),
        })
    }

    /// `10 - 10 years (μ = 10.0 ± 0.0), 4, 5, 9`: ages, female, male, total.
    pub fn summary(&self) -> String {
        format!(
            "{} - {} years (μ = {:.1} ± {:.1}), {}, {}, {}",
            self.age_min, self.age_max, self.age_mean, self.age_sd, self.female, self.male, self.students
        )
    }
}

/// One row per grade present in the data.
pub fn demographic_summary(sessions: &[SessionRecord]) -> Vec<DemographicRow> {
    let mut by_grade: BTreeMap<u8, Vec<&StudentProfile>> = BTreeMap::new();
    for r in sessions {
        by_grade.entry(r.profile.grade).or_default().push(&r.profile);
    }
    by_grade
        .into_iter()
        .filter_map(|(g, ps)| DemographicRow::from_profiles(Group::Grade(g), ps))
        .collect()
}
