//! Core library for the CTSkills problem-decomposition assessment.
//!
//! - [`instrument`]: item registry, sceneries and the twelve question specs
//! - [`scoring`]: target / non-target scoring and rescaling
//! - [`game`]: the per-level state machine and session replay
//! - [`store`]: append-only session persistence with export and import
//! - [`analytics`]: descriptive tables, hypothesis tests and the cohort simulator

pub mod analytics;
pub mod game;
pub mod instrument;
pub mod scoring;
pub mod store;
pub mod time;
