//! The inferential toolkit on small textbook data sets.
//!
//! ```text
//! cargo run -p ctskills-core --example statistics
//! ```

use ctskills_core::analytics::distributions::{ptukey, qtukey};
use ctskills_core::analytics::{
    chi_square_independence, one_way_anova, simulate_latent_scores, tukey_hsd, variance_components, LatentScoreModel,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let groups = [vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]];
    let anova = one_way_anova(&groups)?;
    println!("ANOVA {{1,2,3}} vs {{4,5,6}}: F({}, {}) = {:.4}, p = {:.4}", anova.df[0], anova.df[1], anova.statistic, anova.p_value);

    let table = [[10.0, 20.0], [20.0, 10.0]];
    let chi = chi_square_independence(&table, false)?;
    let yates = chi_square_independence(&table, true)?;
    println!("chi-square [[10,20],[20,10]]: {:.4} (p = {:.4}); with Yates {:.4} (p = {:.4})", chi.statistic, chi.p_value, yates.statistic, yates.p_value);

    println!("\nstudentized range");
    for (k, df) in [(3, 10.0), (5, 20.0), (10, 30.0)] {
        let q = qtukey(0.05, k, df);
        println!("  q(0.05; k = {k}, df = {df}) = {q:.3}   P(Q <= q) = {:.5}", ptukey(q, k, df));
    }

    let scores = [
        vec![2.9, 3.1, 3.4, 2.6, 3.0],
        vec![3.6, 3.9, 3.3, 4.1],
        vec![4.4, 4.0, 4.7, 4.3, 4.5, 4.1],
    ];
    let names: Vec<String> = ["grade 4", "grade 6", "grade 8"].map(String::from).to_vec();
    println!("\nTukey HSD");
    for pair in tukey_hsd(&scores, Some(&names))? {
        println!(
            "  {:<18} MD = {:+.3}  q = {:.3}  p = {:.4}{}",
            pair.label,
            pair.mean_difference.unwrap_or_default(),
            pair.statistic,
            pair.p_value,
            if pair.significant(0.05) { "  *" } else { "" }
        );
    }

    let model = LatentScoreModel::default();
    println!("\nvariance components (true question variance {:.2})", model.question_variance());
    for c in variance_components(&simulate_latent_scores(&model))? {
        println!("  {:<9} sigma^2 = {:.4}  sd = {:.4}  residual MS = {:.4}", c.factor, c.variance, c.sd, c.residual);
    }
    Ok(())
}
