//! Simulates a graded cohort and writes the analysis tables.
//!
//! ```text
//! cargo run -p ctskills-core --example cohort_analysis [-- <out-dir>]
//! ```

use std::path::PathBuf;

use ctskills_core::analytics::{analyze, simulate_cohort, write_tables, CohortProfile};
use ctskills_core::instrument::InstrumentConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = InstrumentConfig::default_instrument();
    // skill rises linearly from 0.4 in grade 4 to 0.9 in grade 9
    let profile = CohortProfile::linear(4..=9, 0.4, 0.9, 50, 2024);
    let cohort = simulate_cohort(&config, &profile)?;
    println!("simulated {} sessions", cohort.len());

    let analysis = analyze(&config, &cohort, false);

    println!("\naverage rescaled score by grade");
    for avg in analysis.average_by_grade.iter().filter(|a| a.question.is_none()) {
        println!("  grade {}  {:.3}  (n = {})", avg.grade, avg.mean, avg.students);
    }

    println!("\ndemographics");
    for row in &analysis.demographics {
        println!("  {}", row.summary());
    }

    println!("\ntests");
    for t in &analysis.tests {
        println!("  {:<18} {:<22} stat {:>9.3}  p {:.4}", t.test.as_str(), t.label, t.statistic, t.p_value);
    }
    for s in &analysis.skipped {
        println!("  skipped: {s}");
    }

    let rates = &analysis.selection_rates[0];
    println!("\n{} selection rates ({} attempted)", rates.cell, rates.attempted[0]);
    for row in rates.rows.iter().take(5) {
        println!("  {:<20} {:?} {:.1}%", row.choice.to_string(), row.status, row.rates[0]);
    }

    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("ctskills-tables"));
    let written = write_tables(&analysis, &out)?;
    println!("\nwrote {} files to {}", written.len(), out.display());
    Ok(())
}
