//! The assessment instrument: item registry, the three game sceneries and the
//! twelve question specifications (targets, optional targets, non-target counts).
//!
//! Instruments are loaded from a versioned JSON document (see `docs/instrument.md`);
//! the default instrument ships embedded in the crate. A loaded
//! [`InstrumentConfig`] is immutable and can be shared freely across threads.

mod ids;
mod scenery;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scoring::{AggregationMode, MinScoreMode, ScoringSettings};

pub use ids::{Cell, Choice, ItemId, ItemPair, Level, Question, QuestionKind, RawChoice};
pub use scenery::{
    DropZone, Instance, InstanceId, LevelMode, ObjectGroup, ObjectRole, Point, Scenery, ZoneRegion,
};

/// Non-target count used for every pair question: the screen offers four pair slots.
pub const PAIR_NONTARGET_COUNT: u32 = 4;

/// Current instrument document format.
pub const FORMAT_VERSION: u32 = 1;

/// Reference (|X|, |Y|) per question (rows Q1..Q4) and level (columns L1..L3).
pub const REFERENCE_COUNTS: [[(usize, u32); 3]; 4] = [
    [(5, 6), (8, 3), (7, 1)],
    [(1, 10), (2, 9), (4, 4)],
    [(2, 4), (3, 4), (2, 4)],
    [(2, 4), (4, 4), (2, 4)],
];

const DEFAULT_DOCUMENT: &str = include_str!("../../data/instrument.json");

#[derive(Debug, Error)]
pub enum InstrumentError {
    #[error("schema violation: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("unsupported instrument format {0}")]
    UnsupportedFormat(u32),
    #[error("registry must be non-empty")]
    EmptyRegistry,
    #[error("item {0} registered twice")]
    DuplicateItem(ItemId),
    #[error("invalid item token {0:?}")]
    InvalidItemToken(String),
    #[error("invalid instance id {0:?}")]
    InvalidInstance(String),
    #[error("unknown item {item} in {context}")]
    UnknownItem { item: String, context: String },
    #[error("invalid question {0:?}")]
    InvalidQuestion(String),
    #[error("question {0} out of range 1..4")]
    QuestionOutOfRange(u8),
    #[error("level {0} out of range 1..3")]
    LevelOutOfRange(u8),
    #[error("duplicate question spec for {0}")]
    DuplicateCell(Cell),
    #[error("missing question spec for {0}")]
    MissingCell(Cell),
    #[error("{cell}: kind {found:?} does not match question kind {expected:?}")]
    KindMismatch {
        cell: Cell,
        expected: QuestionKind,
        found: QuestionKind,
    },
    #[error("choice {choice} does not fit a {kind:?} question")]
    ChoiceKind { choice: String, kind: QuestionKind },
    #[error("pair of identical items {0}")]
    SelfPair(ItemId),
    #[error("{cell}: pair-question non-target count must be 4 (declared {declared})")]
    PairNontargetCount { cell: Cell, declared: u32 },
    #[error("{cell}: declared non-target count {declared} but palette implies {derived}")]
    NontargetCount {
        cell: Cell,
        declared: u32,
        derived: u32,
    },
    #[error("{cell}: declared target count {declared} but {listed} targets listed")]
    TargetCount {
        cell: Cell,
        declared: usize,
        listed: usize,
    },
    #[error("{cell}: {choice} is not on the palette")]
    OffPalette { cell: Cell, choice: String },
    #[error("{cell}: {choice} listed as both target and optional")]
    TargetOptionalOverlap { cell: Cell, choice: String },
    #[error("{cell}: {reason}")]
    InvalidSpec { cell: Cell, reason: String },
    #[error("scenery {level}: {reason}")]
    Scenery { level: Level, reason: String },
    #[error("missing scenery for {0}")]
    MissingScenery(Level),
    #[error("{0}")]
    Settings(String),
}

/// Targets, optional targets and the nominal non-target count for one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct QuestionSpec {
    cell: Cell,
    kind: QuestionKind,
    palette: BTreeSet<ItemId>,
    targets: BTreeSet<Choice>,
    optional: BTreeSet<Choice>,
    nontarget_count: u32,
}

impl QuestionSpec {
    pub fn cell(&self) -> Cell {
        self.cell
    }

    pub fn question(&self) -> Question {
        self.cell.question
    }

    pub fn level(&self) -> Level {
        self.cell.level
    }

    pub fn kind(&self) -> QuestionKind {
        self.kind
    }

    pub fn palette(&self) -> &BTreeSet<ItemId> {
        &self.palette
    }

    pub fn targets(&self) -> &BTreeSet<Choice> {
        &self.targets
    }

    pub fn optional(&self) -> &BTreeSet<Choice> {
        &self.optional
    }

    /// |X|
    pub fn target_count(&self) -> usize {
        self.targets.len()
    }

    /// Nominal |Y|.
    pub fn nontarget_count(&self) -> u32 {
        self.nontarget_count
    }

    /// Palette items that are not targets. Empty for pair questions, whose
    /// non-targets are every pair outside the target and optional sets.
    pub fn nontarget_items(&self) -> BTreeSet<ItemId> {
        if self.kind.is_pair() {
            return BTreeSet::new();
        }
        self.palette
            .iter()
            .filter(|id| !self.targets.contains(&Choice::Item((*id).clone())))
            .cloned()
            .collect()
    }

    /// Choices a student could submit: the palette for item questions, all
    /// distinct pairs over the palette for pair questions.
    pub fn candidate_choices(&self) -> Vec<Choice> {
        match self.kind {
            QuestionKind::ItemSelection => self.palette.iter().cloned().map(Choice::Item).collect(),
            QuestionKind::OrderedPairSelection | QuestionKind::UnorderedPairSelection => {
                let ordered = self.kind == QuestionKind::OrderedPairSelection;
                let mut out = BTreeSet::new();
                for a in &self.palette {
                    for b in &self.palette {
                        if a == b || (!ordered && b < a) {
                            continue;
                        }
                        if let Ok(p) = ItemPair::new(a.clone(), b.clone(), ordered) {
                            out.insert(Choice::Pair(p));
                        }
                    }
                }
                out.into_iter().collect()
            }
        }
    }

    fn from_document(doc: QuestionDocument, registry: &BTreeSet<ItemId>) -> Result<Self, InstrumentError> {
        let question: Question = doc.question;
        let level = doc.level;
        let cell = Cell::new(question, level);
        let expected = question.kind();
        if doc.kind != expected {
            return Err(InstrumentError::KindMismatch {
                cell,
                expected,
                found: doc.kind,
            });
        }
        let kind = doc.kind;

        let mut palette = BTreeSet::new();
        for id in doc.palette {
            if !registry.contains(&id) {
                return Err(InstrumentError::UnknownItem {
                    item: id.to_string(),
                    context: format!("palette of {cell}"),
                });
            }
            if !palette.insert(id.clone()) {
                return Err(InstrumentError::InvalidSpec {
                    cell,
                    reason: format!("palette lists {id} twice"),
                });
            }
        }

        let convert = |raws: Vec<RawChoice>| -> Result<BTreeSet<Choice>, InstrumentError> {
            let mut out = BTreeSet::new();
            for raw in raws {
                let choice = Choice::from_raw(raw, kind)?;
                for item in choice.items() {
                    if !registry.contains(item) {
                        return Err(InstrumentError::UnknownItem {
                            item: item.to_string(),
                            context: format!("targets of {cell}"),
                        });
                    }
                    if !palette.contains(item) {
                        return Err(InstrumentError::OffPalette {
                            cell,
                            choice: choice.to_string(),
                        });
                    }
                }
                let label = choice.to_string();
                if !out.insert(choice) {
                    return Err(InstrumentError::InvalidSpec {
                        cell,
                        reason: format!("{label} listed twice"),
                    });
                }
            }
            Ok(out)
        };
        let targets = convert(doc.targets)?;
        let optional = convert(doc.optional)?;

        if targets.is_empty() {
            return Err(InstrumentError::InvalidSpec {
                cell,
                reason: "no targets".into(),
            });
        }
        if let Some(both) = targets.intersection(&optional).next() {
            return Err(InstrumentError::TargetOptionalOverlap {
                cell,
                choice: both.to_string(),
            });
        }
        if doc.target_count != targets.len() {
            return Err(InstrumentError::TargetCount {
                cell,
                declared: doc.target_count,
                listed: targets.len(),
            });
        }
        if kind.is_pair() {
            if doc.nontarget_count != PAIR_NONTARGET_COUNT {
                return Err(InstrumentError::PairNontargetCount {
                    cell,
                    declared: doc.nontarget_count,
                });
            }
        } else {
            if !optional.is_empty() {
                return Err(InstrumentError::InvalidSpec {
                    cell,
                    reason: "item questions carry no optional targets".into(),
                });
            }
            let derived = (palette.len() - targets.len()) as u32;
            if doc.nontarget_count != derived {
                return Err(InstrumentError::NontargetCount {
                    cell,
                    declared: doc.nontarget_count,
                    derived,
                });
            }
        }

        Ok(Self {
            cell,
            kind,
            palette,
            targets,
            optional,
            nontarget_count: doc.nontarget_count,
        })
    }

    fn to_document(&self) -> QuestionDocument {
        QuestionDocument {
            question: self.cell.question,
            level: self.cell.level,
            kind: self.kind,
            palette: self.palette.iter().cloned().collect(),
            targets: self.targets.iter().map(Choice::to_raw).collect(),
            optional: self.optional.iter().map(Choice::to_raw).collect(),
            target_count: self.targets.len(),
            nontarget_count: self.nontarget_count,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradeRange {
    pub min: u8,
    pub max: u8,
}

impl GradeRange {
    pub fn contains(&self, grade: u8) -> bool {
        (self.min..=self.max).contains(&grade)
    }
}

/// A validated instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentConfig {
    pub name: String,
    registry: BTreeSet<ItemId>,
    sceneries: BTreeMap<Level, Scenery>,
    questions: BTreeMap<Cell, QuestionSpec>,
    pub scoring: ScoringSettings,
    pub grades: GradeRange,
    pub pair_slots: u32,
}

impl InstrumentConfig {
    /// The instrument shipped with the crate.
    pub fn default_instrument() -> Self {
        load_instrument(DEFAULT_DOCUMENT).expect("embedded instrument document is valid")
    }

    pub fn default_document() -> &'static str {
        DEFAULT_DOCUMENT
    }

    pub fn registry(&self) -> &BTreeSet<ItemId> {
        &self.registry
    }

    pub fn scenery(&self, level: Level) -> &Scenery {
        &self.sceneries[&level]
    }

    pub fn sceneries(&self) -> impl Iterator<Item = &Scenery> {
        self.sceneries.values()
    }

    pub fn questions(&self) -> impl Iterator<Item = &QuestionSpec> {
        self.questions.values()
    }

    pub fn spec(&self, cell: Cell) -> &QuestionSpec {
        &self.questions[&cell]
    }

    /// Looks up the spec for a question and a raw level number.
    pub fn spec_for(&self, question: Question, level: u8) -> Result<&QuestionSpec, InstrumentError> {
        let level = Level::new(level)?;
        Ok(self.spec(Cell::new(question, level)))
    }

    pub fn with_scoring(mut self, scoring: ScoringSettings) -> Self {
        self.scoring = scoring;
        self
    }

    /// Compares each cell's (|X|, |Y|) to [`REFERENCE_COUNTS`].
    pub fn check_reference_counts(&self) -> Vec<CountCheck> {
        Cell::all()
            .map(|cell| {
                let spec = self.spec(cell);
                let expected = REFERENCE_COUNTS[cell.question as usize][cell.level.number() as usize - 1];
                let actual = (spec.target_count(), spec.nontarget_count());
                CountCheck {
                    cell,
                    expected,
                    actual,
                }
            })
            .collect()
    }

    pub fn to_document(&self) -> InstrumentDocument {
        InstrumentDocument {
            format: FORMAT_VERSION,
            name: self.name.clone(),
            max_scaled: self.scoring.max_scaled,
            min_score_mode: self.scoring.min_score_mode,
            aggregation: self.scoring.aggregation,
            grades: self.grades,
            pair_slots: self.pair_slots,
            registry: self.registry.iter().cloned().collect(),
            sceneries: self.sceneries.values().cloned().collect(),
            questions: self.questions.values().map(QuestionSpec::to_document).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("instrument serializes")
    }

    /// The instrument as served to the game client: sceneries, palettes and
    /// screen settings, without targets or optional targets.
    pub fn client_document(&self) -> ClientDocument {
        ClientDocument {
            format: FORMAT_VERSION,
            name: self.name.clone(),
            max_scaled: self.scoring.max_scaled,
            grades: self.grades,
            pair_slots: self.pair_slots,
            registry: self.registry.iter().cloned().collect(),
            sceneries: self.sceneries.values().cloned().collect(),
            questions: self
                .questions
                .values()
                .map(|q| ClientQuestion {
                    question: q.question(),
                    level: q.level(),
                    kind: q.kind(),
                    text_key: format!("question.{}.prompt", q.question().to_string().to_lowercase()),
                    palette: q.palette().iter().cloned().collect(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientDocument {
    pub format: u32,
    pub name: String,
    pub max_scaled: f64,
    pub grades: GradeRange,
    /// Pair selectors shown on pair questions.
    pub pair_slots: u32,
    pub registry: Vec<ItemId>,
    pub sceneries: Vec<Scenery>,
    pub questions: Vec<ClientQuestion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientQuestion {
    pub question: Question,
    pub level: Level,
    pub kind: QuestionKind,
    /// Localisation key for the prompt text, e.g. `question.q3.prompt`.
    pub text_key: String,
    pub palette: Vec<ItemId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountCheck {
    pub cell: Cell,
    pub expected: (usize, u32),
    pub actual: (usize, u32),
}

impl CountCheck {
    pub fn passed(&self) -> bool {
        self.expected == self.actual
    }
}

/// On-disk form of an instrument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstrumentDocument {
    pub format: u32,
    pub name: String,
    pub max_scaled: f64,
    #[serde(default)]
    pub min_score_mode: MinScoreMode,
    #[serde(default)]
    pub aggregation: AggregationMode,
    pub grades: GradeRange,
    #[serde(default = "default_pair_slots")]
    pub pair_slots: u32,
    pub registry: Vec<ItemId>,
    pub sceneries: Vec<Scenery>,
    pub questions: Vec<QuestionDocument>,
}

fn default_pair_slots() -> u32 {
    PAIR_NONTARGET_COUNT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionDocument {
    pub question: Question,
    pub level: Level,
    pub kind: QuestionKind,
    pub palette: Vec<ItemId>,
    pub targets: Vec<RawChoice>,
    #[serde(default)]
    pub optional: Vec<RawChoice>,
    pub target_count: usize,
    pub nontarget_count: u32,
}

/// Parses and validates an instrument document.
pub fn load_instrument(text: &str) -> Result<InstrumentConfig, InstrumentError> {
    let doc: InstrumentDocument = serde_json::from_str(text)?;
    InstrumentConfig::try_from(doc)
}

impl TryFrom<InstrumentDocument> for InstrumentConfig {
    type Error = InstrumentError;

    fn try_from(doc: InstrumentDocument) -> Result<Self, Self::Error> {
        if doc.format != FORMAT_VERSION {
            return Err(InstrumentError::UnsupportedFormat(doc.format));
        }
        if doc.registry.is_empty() {
            return Err(InstrumentError::EmptyRegistry);
        }
        let mut registry = BTreeSet::new();
        for id in doc.registry {
            if !registry.insert(id.clone()) {
                return Err(InstrumentError::DuplicateItem(id));
            }
        }

        if !(doc.max_scaled.is_finite() && doc.max_scaled > 0.0) {
            return Err(InstrumentError::Settings(format!(
                "max_scaled must be positive, got {}",
                doc.max_scaled
            )));
        }
        if doc.grades.min > doc.grades.max {
            return Err(InstrumentError::Settings("grade range is empty".into()));
        }
        if doc.pair_slots == 0 {
            return Err(InstrumentError::Settings("pair_slots must be positive".into()));
        }

        let mut sceneries = BTreeMap::new();
        for scenery in doc.sceneries {
            scenery.validate(&registry)?;
            let level = scenery.level;
            if sceneries.insert(level, scenery).is_some() {
                return Err(InstrumentError::Scenery {
                    level,
                    reason: "declared twice".into(),
                });
            }
        }
        for level in Level::ALL {
            if !sceneries.contains_key(&level) {
                return Err(InstrumentError::MissingScenery(level));
            }
        }

        let mut questions = BTreeMap::new();
        for q in doc.questions {
            let spec = QuestionSpec::from_document(q, &registry)?;
            let cell = spec.cell;
            if questions.insert(cell, spec).is_some() {
                return Err(InstrumentError::DuplicateCell(cell));
            }
        }
        if let Some(cell) = Cell::all().find(|c| !questions.contains_key(c)) {
            return Err(InstrumentError::MissingCell(cell));
        }

        Ok(InstrumentConfig {
            name: doc.name,
            registry,
            sceneries,
            questions,
            scoring: ScoringSettings {
                max_scaled: doc.max_scaled,
                min_score_mode: doc.min_score_mode,
                aggregation: doc.aggregation,
            },
            grades: doc.grades,
            pair_slots: doc.pair_slots,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_doc() -> serde_json::Value {
        serde_json::from_str(DEFAULT_DOCUMENT).unwrap()
    }

    fn question_mut<'a>(doc: &'a mut serde_json::Value, q: &str, level: u64) -> &'a mut serde_json::Value {
        doc["questions"]
            .as_array_mut()
            .unwrap()
            .iter_mut()
            .find(|v| v["question"] == q && v["level"] == level)
            .unwrap()
    }

    #[test]
    fn client_document_hides_answers() {
        let config = InstrumentConfig::default_instrument();
        let doc = config.client_document();
        assert_eq!(doc.questions.len(), 12);
        assert_eq!(doc.pair_slots, 4);
        assert_eq!(doc.questions[2].text_key, "question.q3.prompt");
        let json = serde_json::to_string(&doc).unwrap();
        assert!(!json.contains("targets") && !json.contains("optional"));
    }

    #[test]
    fn default_instrument_has_twelve_cells() {
        let config = InstrumentConfig::default_instrument();
        assert_eq!(config.questions().count(), 12);
        let q1l1 = config.spec_for(Question::Q1, 1).unwrap();
        assert_eq!(q1l1.target_count(), 5);
        assert_eq!(q1l1.nontarget_count(), 6);
    }

    #[test]
    fn default_counts_match_reference() {
        let config = InstrumentConfig::default_instrument();
        for check in config.check_reference_counts() {
            assert!(check.passed(), "{check:?}");
        }
    }

    #[test]
    fn q2_l1_targets_only_the_red_apple() {
        let config = InstrumentConfig::default_instrument();
        let spec = config.spec_for(Question::Q2, 1).unwrap();
        let expected: BTreeSet<Choice> = [Choice::Item("apple_red".parse().unwrap())].into();
        assert_eq!(spec.targets(), &expected);
        assert_eq!(spec.nontarget_count(), 10);
    }

    #[test]
    fn q4_l1_has_optional_spoiled_apple_on_grass() {
        let config = InstrumentConfig::default_instrument();
        let spec = config.spec_for(Question::Q4, 1).unwrap();
        let targets: BTreeSet<Choice> = [
            Choice::Pair(ItemPair::unordered("apple_red", "basket_red").unwrap()),
            Choice::Pair(ItemPair::unordered("apple_red", "grass").unwrap()),
        ]
        .into();
        let optional: BTreeSet<Choice> =
            [Choice::Pair(ItemPair::unordered("apple_spoiled_red", "grass").unwrap())].into();
        assert_eq!(spec.targets(), &targets);
        assert_eq!(spec.optional(), &optional);
    }

    #[test]
    fn out_of_range_level_rejected() {
        let config = InstrumentConfig::default_instrument();
        assert!(matches!(
            config.spec_for(Question::Q1, 4),
            Err(InstrumentError::LevelOutOfRange(4))
        ));
    }

    #[test]
    fn pair_question_nontarget_count_must_be_four() {
        let mut doc = default_doc();
        question_mut(&mut doc, "Q3", 1)["nontarget_count"] = 5.into();
        let err = load_instrument(&doc.to_string()).unwrap_err();
        assert!(
            err.to_string().contains("pair-question non-target count must be 4"),
            "{err}"
        );
    }

    #[test]
    fn empty_registry_rejected() {
        let mut doc = default_doc();
        doc["registry"] = serde_json::Value::Array(vec![]);
        let err = load_instrument(&doc.to_string()).unwrap_err();
        assert_eq!(err.to_string(), "registry must be non-empty");
    }

    #[test]
    fn unknown_item_rejected() {
        let mut doc = default_doc();
        question_mut(&mut doc, "Q1", 1)["palette"]
            .as_array_mut()
            .unwrap()
            .push("unicorn".into());
        let err = load_instrument(&doc.to_string()).unwrap_err();
        assert!(matches!(err, InstrumentError::UnknownItem { .. }), "{err}");
    }

    #[test]
    fn duplicate_cell_rejected() {
        let mut doc = default_doc();
        let copy = question_mut(&mut doc, "Q2", 2).clone();
        doc["questions"].as_array_mut().unwrap().push(copy);
        let err = load_instrument(&doc.to_string()).unwrap_err();
        assert!(matches!(err, InstrumentError::DuplicateCell(_)), "{err}");
    }

    #[test]
    fn item_count_mismatch_rejected() {
        let mut doc = default_doc();
        question_mut(&mut doc, "Q1", 2)["nontarget_count"] = 4.into();
        let err = load_instrument(&doc.to_string()).unwrap_err();
        assert!(matches!(err, InstrumentError::NontargetCount { derived: 3, .. }), "{err}");

        let mut doc = default_doc();
        question_mut(&mut doc, "Q1", 2)["target_count"] = 7.into();
        let err = load_instrument(&doc.to_string()).unwrap_err();
        assert!(matches!(err, InstrumentError::TargetCount { listed: 8, .. }), "{err}");
    }

    #[test]
    fn missing_cell_rejected() {
        let mut doc = default_doc();
        doc["questions"].as_array_mut().unwrap().pop();
        let err = load_instrument(&doc.to_string()).unwrap_err();
        assert!(matches!(err, InstrumentError::MissingCell(_)), "{err}");
    }

    #[test]
    fn target_and_optional_must_be_disjoint() {
        let mut doc = default_doc();
        let q = question_mut(&mut doc, "Q4", 1);
        let first = q["targets"][0].clone();
        q["optional"].as_array_mut().unwrap().push(first);
        let err = load_instrument(&doc.to_string()).unwrap_err();
        assert!(matches!(err, InstrumentError::TargetOptionalOverlap { .. }), "{err}");
    }

    #[test]
    fn question_kind_is_fixed_per_question() {
        let mut doc = default_doc();
        question_mut(&mut doc, "Q4", 2)["kind"] = "ordered_pair_selection".into();
        let err = load_instrument(&doc.to_string()).unwrap_err();
        assert!(matches!(err, InstrumentError::KindMismatch { .. }), "{err}");
    }

    #[test]
    fn unknown_document_fields_are_schema_errors() {
        let mut doc = default_doc();
        doc["colour_scheme"] = "dark".into();
        assert!(matches!(
            load_instrument(&doc.to_string()),
            Err(InstrumentError::Schema(_))
        ));
    }

    #[test]
    fn document_round_trip_is_structural_identity() {
        let config = InstrumentConfig::default_instrument();
        let again = load_instrument(&config.to_json()).unwrap();
        assert_eq!(config, again);
    }

    #[test]
    fn item_palettes_split_into_targets_and_nontargets() {
        let config = InstrumentConfig::default_instrument();
        for spec in config.questions().filter(|s| !s.kind().is_pair()) {
            let nontargets = spec.nontarget_items();
            let targets: BTreeSet<ItemId> = spec
                .targets()
                .iter()
                .flat_map(|c| c.items().cloned())
                .collect();
            assert!(targets.is_disjoint(&nontargets));
            let union: BTreeSet<ItemId> = targets.union(&nontargets).cloned().collect();
            assert_eq!(&union, spec.palette());
            assert_eq!(nontargets.len() as u32, spec.nontarget_count());
        }
    }

    #[test]
    fn scenery_objects_reference_registered_items() {
        let config = InstrumentConfig::default_instrument();
        for scenery in config.sceneries() {
            for inst in scenery.instances() {
                assert!(config.registry().contains(inst.id.item()));
            }
        }
        assert_eq!(config.scenery(Level::new(1).unwrap()).mode, LevelMode::Drag);
        assert_eq!(config.scenery(Level::new(3).unwrap()).mode, LevelMode::Catch);
    }
}
