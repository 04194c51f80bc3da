//! Seeded synthetic cohorts.
//!
//! [`simulate_cohort`] produces complete, replay-clean session records from a
//! per-grade skill profile. [`simulate_latent_scores`] draws labelled scores
//! from an additive model with known variance components, which is what the
//! variance-component estimator is checked against.

use chrono::Duration;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::game::{GameEvent, LogBuilder, SessionId};
use crate::instrument::{
    Cell, Choice, DropZone, InstrumentConfig, Level, LevelMode, ObjectRole, Question, PAIR_NONTARGET_COUNT,
};
use crate::store::{Gender, LanguageTag, RecordError, SessionRecord, StudentProfile};
use crate::time::{epoch, Timestamp};

use super::LabeledScore;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradeProfile {
    pub grade: u8,
    /// Mean probability of choosing each target.
    pub mean_skill: f64,
    /// Standard deviation of individual skill around the mean.
    pub dispersion: f64,
    /// Per-question multiplier on the non-target probability (1 − skill).
    pub difficulty: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortProfile {
    pub seed: u64,
    pub students_per_grade: usize,
    pub grades: Vec<GradeProfile>,
}

impl CohortProfile {
    /// Skill rising linearly from `low` at the first grade to `high` at the last.
    pub fn linear(grades: std::ops::RangeInclusive<u8>, low: f64, high: f64, students_per_grade: usize, seed: u64) -> Self {
        let (first, last) = (*grades.start(), *grades.end());
        let span = f64::from(last.saturating_sub(first)).max(1.0);
        let grades = grades
            .map(|g| GradeProfile {
                grade: g,
                mean_skill: low + (high - low) * f64::from(g - first) / span,
                dispersion: 0.1,
                difficulty: [0.5; 4],
            })
            .collect();
        Self {
            seed,
            students_per_grade,
            grades,
        }
    }

    /// Every student with exactly `skill` and the same non-target multiplier.
    pub fn uniform(grade: u8, skill: f64, difficulty: f64, students: usize, seed: u64) -> Self {
        Self {
            seed,
            students_per_grade: students,
            grades: vec![GradeProfile {
                grade,
                mean_skill: skill,
                dispersion: 0.0,
                difficulty: [difficulty; 4],
            }],
        }
    }
}

fn chance(rng: &mut ChaCha8Rng, p: f64) -> bool {
    rng.gen_bool(p.clamp(0.0, 1.0))
}

/// Choices for one cell: targets and optional targets with probability
/// `skill`, each non-target with probability (1 − skill) · `difficulty`.
/// Pair questions offer [`PAIR_NONTARGET_COUNT`] random non-target pairs.
pub fn sample_answer(config: &InstrumentConfig, cell: Cell, skill: f64, difficulty: f64, rng: &mut ChaCha8Rng) -> Vec<Choice> {
    let spec = config.spec(cell);
    let mut chosen: Vec<Choice> = spec
        .targets()
        .iter()
        .chain(spec.optional())
        .filter(|_| chance(rng, skill))
        .cloned()
        .collect();
    let p_wrong = (1.0 - skill) * difficulty;
    let mut wrong: Vec<Choice> = spec
        .candidate_choices()
        .into_iter()
        .filter(|c| !spec.targets().contains(c) && !spec.optional().contains(c))
        .collect();
    if spec.kind().is_pair() {
        wrong.shuffle(rng);
        wrong.truncate(PAIR_NONTARGET_COUNT as usize);
    }
    chosen.extend(wrong.into_iter().filter(|_| chance(rng, p_wrong)));
    chosen
}

/// Random but legal play of one level, ending with `level_completed`.
fn play_level(b: &mut LogBuilder<'_>, config: &InstrumentConfig, level: Level, skill: f64, rng: &mut ChaCha8Rng) {
    let scenery = config.scenery(level);
    let mut instances: Vec<_> = scenery.instances().collect();
    instances.shuffle(rng);
    b.level_started(level);
    match scenery.mode {
        LevelMode::Drag => {
            for inst in instances.iter().filter(|i| i.role == ObjectRole::Apple) {
                let Some(target) = inst.basket else { continue };
                let detours: Vec<DropZone> = [DropZone::Tree, DropZone::Other, DropZone::BasketRed, DropZone::BasketYellow]
                    .into_iter()
                    .filter(|z| *z != target && (*z == DropZone::Other || scenery.region(*z).is_some()))
                    .collect();
                while chance(rng, 0.15) {
                    let zone = *detours.choose(rng).expect("Other is always available");
                    b.wait(rng.gen_range(0..1500)).drag(level, &inst.id, zone);
                }
                let zone = if chance(rng, 0.5 + 0.5 * skill) { target } else { DropZone::Grass };
                b.wait(rng.gen_range(0..1500)).drag(level, &inst.id, zone);
            }
        }
        LevelMode::Catch => {
            let basket = instances
                .iter()
                .find(|i| i.role == ObjectRole::Basket && i.draggable)
                .map(|i| i.id.clone());
            for inst in instances.iter().filter(|i| matches!(i.role, ObjectRole::Apple | ObjectRole::Leaf)) {
                if let Some(basket) = &basket {
                    if chance(rng, 0.5) {
                        b.drag(level, basket, DropZone::Grass);
                    }
                }
                let p_catch = if inst.role == ObjectRole::Apple { 0.4 + 0.5 * skill } else { 0.5 };
                b.wait(rng.gen_range(0..800));
                if chance(rng, p_catch) {
                    b.catch(&inst.id);
                } else {
                    b.miss(&inst.id);
                }
            }
        }
    }
    b.level_completed(level);
}

/// A full session log for one student.
pub fn simulate_session(
    config: &InstrumentConfig,
    id: SessionId,
    start: Timestamp,
    skill: f64,
    difficulty: [f64; 4],
    rng: &mut ChaCha8Rng,
) -> Vec<GameEvent> {
    let mut b = LogBuilder::new(config, id, start);
    b.session_started();
    for level in Level::ALL {
        play_level(&mut b, config, level, skill, rng);
        for question in Question::ALL {
            let cell = Cell::new(question, level);
            let answer = sample_answer(config, cell, skill, difficulty[question.number() as usize - 1], rng);
            b.show(cell).wait(rng.gen_range(2000..20000)).submit(cell, answer);
        }
    }
    b.finish()
}

pub fn simulated_id(seed: u64, index: usize) -> SessionId {
    SessionId::new(format!("sim-{seed:x}-{index:04}")).expect("well-formed id")
}

/// Simulates every student of the profile, grade by grade.
pub fn simulate_cohort(config: &InstrumentConfig, profile: &CohortProfile) -> Result<Vec<SessionRecord>, RecordError> {
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let base = epoch(2024, 3, 4, 8);
    let language = LanguageTag::new("de").expect("valid tag");
    let mut records = Vec::new();
    for grade in &profile.grades {
        let spread = Normal::new(0.0, grade.dispersion.max(0.0)).expect("finite dispersion");
        for _ in 0..profile.students_per_grade {
            let index = records.len();
            let id = simulated_id(profile.seed, index);
            let skill = (grade.mean_skill + spread.sample(&mut rng)).clamp(0.0, 1.0);
            let student = StudentProfile {
                session_id: id.clone(),
                age: grade.grade.saturating_add(5 + rng.gen_range(0..=1)),
                grade: grade.grade,
                gender: if rng.gen_bool(0.5) { Gender::Female } else { Gender::Male },
                language: language.clone(),
            };
            let created = base + Duration::minutes(index as i64);
            let events = simulate_session(config, id, created + Duration::seconds(1), skill, grade.difficulty, &mut rng);
            let closed = events.last().map(|e| e.at);
            records.push(SessionRecord::derive(config, student, created, closed, events)?);
        }
    }
    Ok(records)
}

/// Additive score model: baseline + question offset + grade effect + student
/// effect + residual, observed once per (student, question, level).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentScoreModel {
    pub seed: u64,
    pub students: usize,
    pub grades: Vec<u8>,
    pub baseline: f64,
    /// Fixed question effects; their sample variance is the question component.
    pub question_offsets: [f64; 4],
    /// Added per grade step above the first grade.
    pub grade_step: f64,
    pub student_sd: f64,
    pub residual_sd: f64,
}

impl LatentScoreModel {
    /// Question effects whose sample variance (n − 1 divisor) is exactly `variance`.
    pub fn offsets_with_variance(pattern: [f64; 4], variance: f64) -> [f64; 4] {
        let mean = pattern.iter().sum::<f64>() / 4.0;
        let centred = pattern.map(|x| x - mean);
        let current = centred.iter().map(|x| x * x).sum::<f64>() / 3.0;
        let scale = (variance / current).sqrt();
        centred.map(|x| x * scale)
    }

    pub fn question_variance(&self) -> f64 {
        let mean = self.question_offsets.iter().sum::<f64>() / 4.0;
        self.question_offsets.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 3.0
    }

    pub fn with_question_variance(mut self, variance: f64) -> Self {
        self.question_offsets = Self::offsets_with_variance(self.question_offsets, variance);
        self
    }
}

impl Default for LatentScoreModel {
    fn default() -> Self {
        Self {
            seed: 1,
            students: 300,
            grades: (4..=9).collect(),
            baseline: 2.5,
            question_offsets: Self::offsets_with_variance([0.9, -0.4, -0.9, 0.4], 0.5),
            grade_step: 0.1,
            student_sd: 0.6,
            residual_sd: 1.0,
        }
    }
}

pub fn simulate_latent_scores(model: &LatentScoreModel) -> Vec<LabeledScore> {
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let student = Normal::new(0.0, model.student_sd).expect("finite sd");
    let noise = Normal::new(0.0, model.residual_sd).expect("finite sd");
    let first_grade = model.grades.first().copied().unwrap_or(0);
    let mut out = Vec::with_capacity(model.students * 12);
    for i in 0..model.students {
        let grade = model.grades[i % model.grades.len().max(1)];
        let effect = model.baseline + student.sample(&mut rng) + model.grade_step * f64::from(grade - first_grade);
        let id = simulated_id(model.seed, i);
        for cell in Cell::all() {
            let q = model.question_offsets[cell.question.number() as usize - 1];
            out.push(LabeledScore {
                student: id.clone(),
                grade,
                question: cell.question,
                level: cell.level,
                score: effect + q + noise.sample(&mut rng),
            });
        }
    }
    out
}
