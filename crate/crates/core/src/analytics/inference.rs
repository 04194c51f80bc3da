use serde::{Deserialize, Serialize};

use super::distributions::{chi_square_sf, f_sf, ptukey_sf};
use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Anova,
    ChiSquare,
    TukeyPair,
    VarianceComponent,
}

impl TestKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TestKind::Anova => "anova",
            TestKind::ChiSquare => "chi_square",
            TestKind::TukeyPair => "tukey_pair",
            TestKind::VarianceComponent => "variance_component",
        }
    }
}

/// Outcome of one hypothesis test or variance component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatTestResult {
    pub test: TestKind,
    /// What was tested, e.g. `grade` or `grade 8 vs grade 4`.
    pub label: String,
    pub statistic: f64,
    /// One entry for chi-square, two for F-type statistics.
    pub df: Vec<f64>,
    pub p_value: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean_difference: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sd: Option<f64>,
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub truncated: bool,
}

impl StatTestResult {
    fn new(test: TestKind, label: impl Into<String>, statistic: f64, df: Vec<f64>, p_value: f64) -> Self {
        Self {
            test,
            label: label.into(),
            statistic,
            df,
            p_value,
            mean_difference: None,
            variance: None,
            sd: None,
            truncated: false,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Sums of squares behind a one-way layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneWay {
    pub groups: usize,
    pub n: usize,
    pub grand_mean: f64,
    pub ss_between: f64,
    pub ss_within: f64,
    pub ss_total: f64,
}

impl OneWay {
    pub fn df_between(&self) -> f64 {
        (self.groups - 1) as f64
    }

    pub fn df_within(&self) -> f64 {
        (self.n - self.groups) as f64
    }

    pub fn ms_between(&self) -> f64 {
        self.ss_between / self.df_between()
    }

    pub fn ms_within(&self) -> f64 {
        self.ss_within / self.df_within()
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn one_way<S: AsRef<[f64]>>(groups: &[S]) -> Result<OneWay, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups(groups.len()));
    }
    if let Some(i) = groups.iter().position(|g| g.as_ref().is_empty()) {
        return Err(StatsError::EmptyGroup(i));
    }
    if groups.iter().flat_map(|g| g.as_ref()).any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n: usize = groups.iter().map(|g| g.as_ref().len()).sum();
    if n <= groups.len() {
        return Err(StatsError::NoResidualDf { n, groups: groups.len() });
    }
    let all: Vec<f64> = groups.iter().flat_map(|g| g.as_ref().iter().copied()).collect();
    let grand_mean = mean(&all);
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let g = g.as_ref();
        let m = mean(g);
        ss_between += g.len() as f64 * (m - grand_mean).powi(2);
        ss_within += g.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    }
    let ss_total = all.iter().map(|x| (x - grand_mean).powi(2)).sum();
    Ok(OneWay {
        groups: groups.len(),
        n,
        grand_mean,
        ss_between,
        ss_within,
        ss_total,
    })
}

/// Relative size below which a sum of squares counts as zero.
const ZERO_SS: f64 = 1e-12;

fn is_zero(ss: f64, scale: f64) -> bool {
    ss <= ZERO_SS * scale.max(f64::MIN_POSITIVE)
}

/// One-way ANOVA with F = MSB / MSW on (k − 1, N − k) degrees of freedom.
pub fn one_way_anova<S: AsRef<[f64]>>(groups: &[S]) -> Result<StatTestResult, StatsError> {
    let layout = one_way(groups)?;
    let scale: f64 = groups
        .iter()
        .flat_map(|g| g.as_ref())
        .map(|x| x * x)
        .sum::<f64>();
    let between_zero = is_zero(layout.ss_between, scale);
    let within_zero = is_zero(layout.ss_within, scale);
    let (f, p) = match (between_zero, within_zero) {
        (true, true) => return Err(StatsError::UndefinedStatistic),
        (true, false) => (0.0, 1.0),
        (false, true) => (f64::INFINITY, 0.0),
        (false, false) => {
            let f = layout.ms_between() / layout.ms_within();
            (f, f_sf(f, layout.df_between(), layout.df_within()))
        }
    };
    Ok(StatTestResult::new(
        TestKind::Anova,
        "",
        f,
        vec![layout.df_between(), layout.df_within()],
        p,
    ))
}

/// Pearson chi-square test of independence for an r × c table of counts.
///
/// `yates` applies the continuity correction, which only exists for 2 × 2
/// tables; it is ignored for larger ones.
pub fn chi_square_independence<R: AsRef<[f64]>>(table: &[R], yates: bool) -> Result<StatTestResult, StatsError> {
    let rows = table.len();
    let cols = table.first().map_or(0, |r| r.as_ref().len());
    if rows < 2 || cols < 2 {
        return Err(StatsError::TableTooSmall { rows, cols });
    }
    if table.iter().any(|r| r.as_ref().len() != cols) {
        return Err(StatsError::RaggedTable);
    }
    if table.iter().flat_map(|r| r.as_ref()).any(|x| !x.is_finite() || *x < 0.0) {
        return Err(StatsError::NegativeCount);
    }
    let row_sums: Vec<f64> = table.iter().map(|r| r.as_ref().iter().sum()).collect();
    let col_sums: Vec<f64> = (0..cols)
        .map(|j| table.iter().map(|r| r.as_ref()[j]).sum())
        .collect();
    if row_sums.iter().chain(&col_sums).any(|s| *s <= 0.0) {
        return Err(StatsError::ZeroMarginal);
    }
    let total: f64 = row_sums.iter().sum();
    let correct = yates && rows == 2 && cols == 2;
    let mut chi2 = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &observed) in row.as_ref().iter().enumerate() {
            let expected = row_sums[i] * col_sums[j] / total;
            let mut dev = (observed - expected).abs();
            if correct {
                dev = (dev - 0.5).max(0.0);
            }
            chi2 += dev * dev / expected;
        }
    }
    // an outer-product table leaves only rounding residue
    if chi2 < 1e-12 * total {
        chi2 = 0.0;
    }
    let df = ((rows - 1) * (cols - 1)) as f64;
    Ok(StatTestResult::new(
        TestKind::ChiSquare,
        "",
        chi2,
        vec![df],
        chi_square_sf(chi2, df),
    ))
}

/// Tukey's HSD (Tukey–Kramer for unequal sizes) over every unordered group pair.
///
/// Pairs come out as (j, i) with i < j, so `mean_difference` is
/// mean_j − mean_i. Labels use `names` when given, group indices otherwise.
pub fn tukey_hsd<S: AsRef<[f64]>>(groups: &[S], names: Option<&[String]>) -> Result<Vec<StatTestResult>, StatsError> {
    let layout = one_way(groups)?;
    let msw = layout.ms_within();
    if msw.is_nan() || msw <= 0.0 {
        return Err(StatsError::ZeroWithinVariance);
    }
    let k = groups.len() as u32;
    let df = layout.df_within();
    let means: Vec<f64> = groups.iter().map(|g| mean(g.as_ref())).collect();
    let name = |i: usize| names.and_then(|n| n.get(i).cloned()).unwrap_or_else(|| format!("g{}", i + 1));
    let mut out = Vec::new();
    for i in 0..groups.len() {
        for j in i + 1..groups.len() {
            let (ni, nj) = (groups[i].as_ref().len() as f64, groups[j].as_ref().len() as f64);
            let md = means[j] - means[i];
            let se = (msw * (1.0 / ni + 1.0 / nj) / 2.0).sqrt();
            let q = md.abs() / se;
            let mut result = StatTestResult::new(
                TestKind::TukeyPair,
                format!("{} vs {}", name(j), name(i)),
                q,
                vec![f64::from(k), df],
                ptukey_sf(q, k, df),
            );
            result.mean_difference = Some(md);
            out.push(result);
        }
    }
    Ok(out)
}

/// Looks up MD(a, b) = mean_a − mean_b in a [`tukey_hsd`] result, in either orientation.
pub fn tukey_pair(results: &[StatTestResult], a: &str, b: &str) -> Option<StatTestResult> {
    results.iter().find_map(|r| {
        if r.label == format!("{a} vs {b}") {
            Some(r.clone())
        } else if r.label == format!("{b} vs {a}") {
            let mut flipped = r.clone();
            flipped.label = format!("{a} vs {b}");
            flipped.mean_difference = r.mean_difference.map(|md| -md);
            Some(flipped)
        } else {
            None
        }
    })
}

/// One-way random-effects estimate for a single grouping factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceComponent {
    pub factor: String,
    pub groups: usize,
    pub n: usize,
    pub ms_between: f64,
    /// Within-group mean square: the residual variance for this factor.
    pub residual: f64,
    /// Effective group size for unbalanced designs.
    pub n0: f64,
    pub variance: f64,
    pub sd: f64,
    /// The raw moment estimate was negative and has been set to zero.
    pub truncated: bool,
    pub f: f64,
    pub p_value: f64,
}

impl VarianceComponent {
    pub fn to_result(&self) -> StatTestResult {
        let mut r = StatTestResult::new(
            TestKind::VarianceComponent,
            self.factor.clone(),
            self.f,
            vec![(self.groups - 1) as f64, (self.n - self.groups) as f64],
            self.p_value,
        );
        r.variance = Some(self.variance);
        r.sd = Some(self.sd);
        r.truncated = self.truncated;
        r
    }
}

/// σ̂² = max(0, (MSB − MSW) / n₀) with n₀ = (N − Σnᵢ²/N) / (k − 1).
pub fn variance_component<S: AsRef<[f64]>>(factor: &str, groups: &[S]) -> Result<VarianceComponent, StatsError> {
    let layout = one_way(groups)?;
    let n = layout.n as f64;
    let sum_sq: f64 = groups.iter().map(|g| (g.as_ref().len() as f64).powi(2)).sum();
    let n0 = (n - sum_sq / n) / layout.df_between();
    let msb = layout.ms_between();
    let msw = layout.ms_within();
    let raw = (msb - msw) / n0;
    let scale = layout.ss_total.max(f64::MIN_POSITIVE);
    let (f, p_value) = if is_zero(layout.ss_within, scale) {
        if is_zero(layout.ss_between, scale) {
            (0.0, 1.0)
        } else {
            (f64::INFINITY, 0.0)
        }
    } else {
        let f = msb / msw;
        (f, f_sf(f, layout.df_between(), layout.df_within()))
    };
    let (variance, residual) = if is_zero(layout.ss_total, layout.ss_total + layout.grand_mean.powi(2) * n) {
        (0.0, 0.0)
    } else {
        (raw.max(0.0), msw)
    };
    Ok(VarianceComponent {
        factor: factor.to_owned(),
        groups: layout.groups,
        n: layout.n,
        ms_between: msb,
        residual,
        n0,
        variance,
        sd: variance.sqrt(),
        truncated: raw < 0.0,
        f,
        p_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anova_hand_example() {
        let r = one_way_anova(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert!((r.statistic - 13.5).abs() < 1e-12);
        assert_eq!(r.df, vec![1.0, 4.0]);
        assert!((r.p_value - 0.0213).abs() < 1e-4);
    }

    #[test]
    fn anova_edge_cases() {
        let same = one_way_anova(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!((same.statistic, same.p_value), (0.0, 1.0));
        assert_eq!(
            one_way_anova(&[vec![3.0, 3.0], vec![3.0, 3.0]]),
            Err(StatsError::UndefinedStatistic)
        );
        let split = one_way_anova(&[vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        assert_eq!((split.statistic, split.p_value), (f64::INFINITY, 0.0));
        assert_eq!(one_way_anova(&[vec![1.0]]), Err(StatsError::TooFewGroups(1)));
        assert_eq!(one_way_anova(&[vec![1.0], vec![]]), Err(StatsError::EmptyGroup(1)));
        assert!(matches!(
            one_way_anova(&[vec![1.0], vec![2.0]]),
            Err(StatsError::NoResidualDf { n: 2, groups: 2 })
        ));
    }

    #[test]
    fn chi_square_examples() {
        let r = chi_square_independence(&[[10.0, 20.0], [20.0, 10.0]], false).unwrap();
        assert!((r.statistic - 20.0 / 3.0).abs() < 1e-12);
        assert!((r.p_value - 0.0098).abs() < 1e-4);
        let y = chi_square_independence(&[[10.0, 20.0], [20.0, 10.0]], true).unwrap();
        // closed form with correction: N(|ad − bc| − N/2)² / (row and column products)
        let exact = 60.0 * (300.0f64 - 30.0).powi(2) / (30.0f64.powi(4));
        assert!((y.statistic - exact).abs() < 1e-12);
        let indep = chi_square_independence(&[[2.0, 4.0], [3.0, 6.0]], false).unwrap();
        assert_eq!((indep.statistic, indep.p_value), (0.0, 1.0));
        assert_eq!(
            chi_square_independence(&[[0.0, 0.0], [1.0, 2.0]], false),
            Err(StatsError::ZeroMarginal)
        );
        assert!(chi_square_independence(&[[1.0, 2.0]], false).is_err());
    }

    #[test]
    fn tukey_mean_differences() {
        let groups = [vec![1.0, 2.0, 3.0], vec![2.0, 3.0, 4.0], vec![5.0, 6.0, 7.0]];
        let r = tukey_hsd(&groups, None).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(tukey_pair(&r, "g2", "g1").unwrap().mean_difference, Some(1.0));
        assert_eq!(tukey_pair(&r, "g3", "g1").unwrap().mean_difference, Some(4.0));
        let ab = tukey_pair(&r, "g1", "g3").unwrap();
        let ba = tukey_pair(&r, "g3", "g1").unwrap();
        assert_eq!(ab.mean_difference, ba.mean_difference.map(|m| -m));
        assert_eq!(ab.p_value, ba.p_value);
        assert!(r.iter().all(|t| (0.0..=1.0).contains(&t.p_value)));
        assert!(tukey_hsd(&[vec![1.0, 1.0], vec![2.0, 2.0]], None).is_err());
    }

    #[test]
    fn variance_component_hand_example() {
        let c = variance_component("g", &[vec![4.0, 6.0], vec![8.0, 10.0]]).unwrap();
        assert_eq!((c.ms_between, c.residual, c.n0), (16.0, 2.0, 2.0));
        assert_eq!(c.variance, 7.0);
        assert!(!c.truncated);
        let flat = variance_component("g", &[vec![3.0, 3.0], vec![3.0, 3.0, 3.0]]).unwrap();
        assert_eq!((flat.variance, flat.residual), (0.0, 0.0));
        let neg = variance_component("g", &[vec![1.0, 5.0], vec![5.0, 1.0]]).unwrap();
        assert!(neg.truncated);
        assert_eq!(neg.variance, 0.0);
    }

    #[test]
    fn unbalanced_n0() {
        let c = variance_component("g", &[vec![1.0], vec![2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let n0 = (6.0 - (1.0 + 4.0 + 9.0) / 6.0) / 2.0;
        assert!((c.n0 - n0).abs() < 1e-12);
    }
}
