//! HTTP service and command-line front end for the CTSkills assessment.

pub mod api;
pub mod cli;
