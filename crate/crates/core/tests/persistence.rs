//! The on-disk store under realistic traffic: batching, retries, restarts, export and import.

use std::sync::Arc;

use ctskills_core::analytics::{simulate_cohort, CohortProfile};
use ctskills_core::instrument::InstrumentConfig;
use ctskills_core::store::{read_export, ExportFilter, NewProfile, SessionStore, StoreError};
use ctskills_core::time::epoch;

fn load(store: &SessionStore, cohort: &[ctskills_core::store::SessionRecord]) {
    for (n, record) in cohort.iter().enumerate() {
        let p = &record.profile;
        let new = NewProfile {
            session_id: Some(p.session_id.clone()),
            age: p.age,
            grade: p.grade,
            gender: p.gender,
            language: p.language.clone(),
        };
        store.create_session(new.clone()).unwrap();
        // a flaky network: the create is retried
        assert!(!store.create_session(new).unwrap().created);
        let batch = 3 + n % 9;
        let mut acked = 0;
        for chunk in record.events.chunks(batch) {
            acked = store.append_events(&p.session_id, chunk.to_vec()).unwrap();
            // and every batch is delivered twice
            assert_eq!(store.append_events(&p.session_id, chunk.to_vec()).unwrap(), acked);
        }
        assert_eq!(acked, record.events.len() as u64);
    }
}

#[test]
fn export_import_export_is_byte_identical() {
    let config = Arc::new(InstrumentConfig::default_instrument());
    let cohort = simulate_cohort(&config, &CohortProfile::linear(4..=9, 0.3, 0.9, 4, 77)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path(), config.clone())
        .unwrap()
        .with_clock(|| epoch(2024, 6, 1, 12));
    load(&store, &cohort);

    let mut first = Vec::new();
    store.export_to(&ExportFilter::default(), &mut first).unwrap();
    let parsed = read_export(first.as_slice()).unwrap();
    assert_eq!(parsed.len(), cohort.len());
    for (stored, simulated) in parsed.iter().zip(&cohort) {
        assert_eq!(stored.reports, simulated.reports);
        assert_eq!(stored.aggregate, simulated.aggregate);
        assert!(stored.events.iter().zip(&simulated.events).all(|(a, b)| a.same_as(b)));
    }

    let other_dir = tempfile::tempdir().unwrap();
    let other = SessionStore::open(other_dir.path(), config.clone()).unwrap();
    let summary = other.import(first.as_slice()).unwrap();
    assert_eq!((summary.accepted, summary.rejected.len()), (cohort.len(), 0));
    let mut second = Vec::new();
    other.export_to(&ExportFilter::default(), &mut second).unwrap();
    assert_eq!(first, second);

    drop(other);
    let reopened = SessionStore::open(other_dir.path(), config).unwrap();
    let mut third = Vec::new();
    reopened.export_to(&ExportFilter::default(), &mut third).unwrap();
    assert_eq!(first, third);
}

#[test]
fn gap_batches_leave_disk_untouched() {
    let config = Arc::new(InstrumentConfig::default_instrument());
    let cohort = simulate_cohort(&config, &CohortProfile::uniform(5, 0.7, 0.5, 1, 9)).unwrap();
    let record = &cohort[0];
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path(), config).unwrap();
    let p = &record.profile;
    let id = store
        .create_session(NewProfile {
            session_id: Some(p.session_id.clone()),
            age: p.age,
            grade: p.grade,
            gender: p.gender,
            language: p.language.clone(),
        })
        .unwrap()
        .session_id;
    assert_eq!(store.append_events(&id, record.events[..10].to_vec()).unwrap(), 10);
    let log = dir.path().join("sessions").join(format!("{id}.jsonl"));
    let before = std::fs::read(&log).unwrap();

    // seq 12..20 onto a log ending at 10
    let err = store.append_events(&id, record.events[11..20].to_vec()).unwrap_err();
    assert!(matches!(err, StoreError::Gap { expected: 11, found: 12, next: 11 }));
    // a batch that starts right but hides a gap inside
    let mut holed = record.events[10..20].to_vec();
    holed.remove(4);
    assert!(store.append_events(&id, holed).is_err());

    assert_eq!(std::fs::read(&log).unwrap(), before);
    assert_eq!(store.record(&id).unwrap().events.len(), 10);
}

#[test]
fn concurrent_sessions_do_not_interfere() {
    let config = Arc::new(InstrumentConfig::default_instrument());
    let cohort = simulate_cohort(&config, &CohortProfile::linear(4..=7, 0.5, 0.8, 3, 31)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let store = Arc::new(SessionStore::open(dir.path(), config.clone()).unwrap());
    std::thread::scope(|scope| {
        for chunk in cohort.chunks(3) {
            let store = store.clone();
            scope.spawn(move || load(&store, chunk));
        }
    });
    assert_eq!(store.len(), cohort.len());
    drop(store);
    let reopened = SessionStore::open(dir.path(), config).unwrap();
    for record in &cohort {
        let stored = reopened.record(record.session_id()).unwrap();
        assert_eq!(stored.reports, record.reports);
        assert!(stored.closed_at.is_some());
    }
}
