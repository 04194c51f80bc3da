//! Descriptive tables, variance components and the simulator, end to end.

use ctskills_core::analytics::{
    analyze, average_by_grade, demographic_summary, labeled_scores, one_way_anova, score_distribution,
    selection_rates, simulate_cohort, simulate_latent_scores, variance_components, write_tables, ChoiceStatus,
    CohortProfile, DemographicRow, Group, LatentScoreModel, TABLE_FILES,
};
use ctskills_core::game::{LogBuilder, SessionId};
use ctskills_core::instrument::{Cell, Choice, InstrumentConfig, ItemId, Level, Question};
use ctskills_core::store::{Gender, LanguageTag, SessionRecord, StudentProfile};
use ctskills_core::time::epoch;
use proptest::prelude::*;

fn profile(id: &str, grade: u8, age: u8, gender: Gender) -> StudentProfile {
    StudentProfile {
        session_id: SessionId::new(id).unwrap(),
        age,
        grade,
        gender,
        language: LanguageTag::new("de").unwrap(),
    }
}

fn item(s: &str) -> Choice {
    Choice::Item(ItemId::new(s).unwrap())
}

/// A session that plays level 1 and answers only Q1/L1.
fn q1_session(config: &InstrumentConfig, id: &str, grade: u8, chosen: &[&str]) -> SessionRecord {
    let sid = SessionId::new(id).unwrap();
    let l1 = Level::new(1).unwrap();
    let cell = Cell::new(Question::Q1, l1);
    let mut b = LogBuilder::new(config, sid, epoch(2024, 2, 1, 8));
    b.session_started().play_level_cleanly(l1).show(cell).submit(cell, chosen.iter().map(|c| item(c)));
    SessionRecord::derive(config, profile(id, grade, grade + 6, Gender::Male), epoch(2024, 2, 1, 8), None, b.finish()).unwrap()
}

#[test]
fn selection_rates_count_attempted_sessions_only() {
    let config = InstrumentConfig::default_instrument();
    let cell = Cell::new(Question::Q1, Level::new(1).unwrap());
    let sessions = vec![
        q1_session(&config, "a", 4, &["apple_red", "rock"]),
        q1_session(&config, "b", 4, &["rock"]),
    ];
    let table = selection_rates(&config, &sessions, cell, false);
    assert_eq!(table.attempted, vec![2]);
    let apple = table.row(&item("apple_red")).unwrap();
    assert_eq!((apple.status, apple.rates[0]), (ChoiceStatus::Target, 50.0));
    let rock = table.row(&item("rock")).unwrap();
    assert_eq!((rock.status, rock.rates[0]), (ChoiceStatus::NonTarget, 100.0));
    assert!(table.rows.iter().all(|r| (0.0..=100.0).contains(&r.rates[0])));

    // a cell nobody reached
    let empty = selection_rates(&config, &sessions, Cell::new(Question::Q2, Level::new(3).unwrap()), false);
    assert!(empty.is_empty());
    assert!(empty.rows.is_empty());
}

#[test]
fn selection_rates_by_grade_have_one_column_per_grade() {
    let config = InstrumentConfig::default_instrument();
    let cohort = simulate_cohort(&config, &CohortProfile::linear(4..=6, 0.4, 0.8, 6, 5)).unwrap();
    let cell = Cell::new(Question::Q3, Level::new(2).unwrap());
    let table = selection_rates(&config, &cohort, cell, true);
    assert_eq!(table.groups, vec![Group::Grade(4), Group::Grade(5), Group::Grade(6)]);
    assert_eq!(table.attempted, vec![6, 6, 6]);
    assert!(table.rows.iter().all(|r| r.rates.len() == 3));
}

#[test]
fn score_distribution_percentages_sum_to_100() {
    let config = InstrumentConfig::default_instrument();
    let cohort = simulate_cohort(&config, &CohortProfile::linear(4..=9, 0.2, 0.9, 7, 17)).unwrap();
    for h in score_distribution(&cohort) {
        assert_eq!(h.attempted, cohort.len());
        let total: f64 = h.bins.iter().map(|b| b.percent).sum();
        assert!((total - 100.0).abs() < 1e-9, "{}", h.cell);
        assert_eq!(h.bins.iter().map(|b| b.count).sum::<usize>(), h.attempted);
    }
}

#[test]
fn demographics_table_row() {
    // first session of the pilot: nine ten-year-olds, four girls and five boys
    let students: Vec<StudentProfile> = (0..9)
        .map(|i| profile(&format!("p{i}"), 4, 10, if i < 4 { Gender::Female } else { Gender::Male }))
        .collect();
    let row = DemographicRow::from_profiles(Group::Grade(4), &students).unwrap();
    assert_eq!(row.summary(), "10 - 10 years (μ = 10.0 ± 0.0), 4, 5, 9");

    assert!(demographic_summary(&[]).is_empty());
    let single = DemographicRow::from_profiles(Group::All, &[profile("x", 6, 12, Gender::Other)]).unwrap();
    assert_eq!((single.age_mean, single.age_sd), (12.0, 0.0));
    assert!(single.summary().starts_with("12 - 12 years (μ = 12.0 ± 0.0)"));
}

#[test]
fn variance_components_recover_the_question_variance() {
    let model = LatentScoreModel::default();
    assert!((model.question_variance() - 0.5).abs() < 1e-12);
    let scores = simulate_latent_scores(&model);
    assert_eq!(scores.len(), 300 * 12);
    let comps = variance_components(&scores).unwrap();
    assert!(comps.iter().all(|c| c.variance >= 0.0));
    let q = comps.iter().find(|c| c.factor == "question").unwrap();
    assert!((q.variance - 0.5).abs() / 0.5 < 0.2, "question variance {}", q.variance);
    let s = comps.iter().find(|c| c.factor == "student").unwrap();
    assert!(s.variance > 0.0);
}

#[test]
fn variance_components_on_flat_scores_are_zero() {
    let config = InstrumentConfig::default_instrument();
    let perfect = simulate_cohort(&config, &CohortProfile::linear(4..=5, 1.0, 1.0, 3, 1)).unwrap();
    let perfect: Vec<_> = perfect
        .into_iter()
        .map(|mut r| {
            r.reports.iter_mut().for_each(|rep| rep.rescaled = Some(5.0));
            r
        })
        .collect();
    let comps = variance_components(&labeled_scores(&perfect)).unwrap();
    assert!(comps.iter().all(|c| c.variance == 0.0 && c.residual == 0.0));
}

#[test]
fn grade_trend_is_monotone_and_significant() {
    let config = InstrumentConfig::default_instrument();
    let cohort = simulate_cohort(&config, &CohortProfile::linear(4..=9, 0.4, 0.9, 50, 2024)).unwrap();
    let overall: Vec<f64> = average_by_grade(&cohort)
        .into_iter()
        .filter(|a| a.question.is_none())
        .map(|a| a.mean)
        .collect();
    assert_eq!(overall.len(), 6);
    assert!(overall.windows(2).all(|w| w[0] <= w[1]), "{overall:?}");
    let groups: Vec<Vec<f64>> = (4..=9)
        .map(|g| cohort.iter().filter(|r| r.profile.grade == g).filter_map(|r| r.aggregate).collect())
        .collect();
    assert!(one_way_anova(&groups).unwrap().p_value < 0.05);
}

#[test]
fn analyze_writes_every_table() {
    let config = InstrumentConfig::default_instrument();
    let cohort = simulate_cohort(&config, &CohortProfile::linear(4..=9, 0.3, 0.9, 10, 8)).unwrap();
    let analysis = analyze(&config, &cohort, true);
    assert!(analysis.skipped.is_empty(), "{:?}", analysis.skipped);
    let dir = tempfile::tempdir().unwrap();
    let written = write_tables(&analysis, dir.path()).unwrap();
    assert_eq!(written.len(), 12 + TABLE_FILES.len());
    for name in TABLE_FILES {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let tests = std::fs::read_to_string(dir.path().join("tests.csv")).unwrap();
    assert!(tests.starts_with("test,label,statistic,df1,df2,p_value,mean_difference,variance,sd,truncated\n"));
    assert!(tests.contains("anova,grade,"));
    assert!(tests.contains("tukey_pair,grade 9 vs grade 4,"));
    assert!(tests.contains("variance_component,question,"));
    let rates = std::fs::read_to_string(dir.path().join("selection_rates_Q1_L1.csv")).unwrap();
    assert!(rates.starts_with("choice,status,grade_4,grade_5,grade_6,grade_7,grade_8,grade_9\n(attempted),,10,10,10,10,10,10\n"));

    // same input, same bytes
    let again = tempfile::tempdir().unwrap();
    write_tables(&analyze(&config, &cohort, true), again.path()).unwrap();
    for path in &written {
        let name = path.file_name().unwrap();
        assert_eq!(std::fs::read(path).unwrap(), std::fs::read(again.path().join(name)).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn tables_ignore_session_order(seed in any::<u64>(), rotate in 1usize..20) {
        let config = InstrumentConfig::default_instrument();
        let cohort = simulate_cohort(&config, &CohortProfile::linear(4..=5, 0.3, 0.8, 10, seed)).unwrap();
        let mut shuffled = cohort.clone();
        shuffled.rotate_left(rotate);
        shuffled.reverse();
        for cell in Cell::all() {
            prop_assert_eq!(
                selection_rates(&config, &cohort, cell, true),
                selection_rates(&config, &shuffled, cell, true)
            );
        }
        prop_assert_eq!(score_distribution(&cohort), score_distribution(&shuffled));
    }
}
