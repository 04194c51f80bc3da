//! Tail probabilities for the F, chi-square and studentized range distributions.

use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_ur, ln_gamma};
use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};

use super::quadrature::{integrate, integrate_pieces};

/// Absolute error target for the studentized range integrals.
pub const PTUKEY_TOLERANCE: f64 = 1e-4;
const INNER_TOL: f64 = 1e-9;
const OUTER_TOL: f64 = 1e-8;
/// Beyond this many error degrees of freedom the range is treated as normal-scaled.
const DF_LIMIT: f64 = 25_000.0;

/// P(F > f) for F with (d1, d2) degrees of freedom.
pub fn f_sf(f: f64, d1: f64, d2: f64) -> f64 {
    assert!(d1 > 0.0 && d2 > 0.0, "degrees of freedom must be positive");
    if f.is_nan() {
        return f64::NAN;
    }
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    beta_reg(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * f)).clamp(0.0, 1.0)
}

pub fn f_cdf(f: f64, d1: f64, d2: f64) -> f64 {
    1.0 - f_sf(f, d1, d2)
}

/// P(X > x) for X ~ χ²(df).
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    assert!(df > 0.0, "degrees of freedom must be positive");
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    gamma_ur(0.5 * df, 0.5 * x).clamp(0.0, 1.0)
}

pub fn chi_square_cdf(x: f64, df: f64) -> f64 {
    1.0 - chi_square_sf(x, df)
}

/// Upper normal tail, accurate far into the tail.
fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Φ(z) − Φ(z − w), computed from whichever tail keeps precision.
fn normal_band(z: f64, w: f64) -> f64 {
    if z > 0.0 {
        normal_sf(z - w) - normal_sf(z)
    } else {
        normal_sf(-z) - normal_sf(w - z)
    }
}

/// Distribution function of the range of `k` standard normals.
fn range_cdf(w: f64, k: u32) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let k_f = f64::from(k);
    let integrand = |z: f64| {
        let band = normal_band(z, w);
        if band <= 0.0 {
            0.0
        } else {
            k_f * normal_pdf(z) * band.powi(k as i32 - 1)
        }
    };
    let lo = -8.5;
    let hi = w + 8.5;
    let mut breaks = vec![lo, 0.0, 0.5 * w, w, hi];
    breaks.dedup();
    integrate_pieces(integrand, &breaks, INNER_TOL).clamp(0.0, 1.0)
}

/// P(Q ≤ q) for the studentized range with `k` means and `df` error degrees of freedom.
///
/// Nested adaptive quadrature: the outer integral runs over the density of
/// s = sqrt(χ²_df / df) and the inner one gives the normal range distribution.
pub fn ptukey(q: f64, k: u32, df: f64) -> f64 {
    assert!(k >= 2, "the studentized range needs at least two means");
    assert!(df > 0.0, "degrees of freedom must be positive");
    if q.is_nan() {
        return f64::NAN;
    }
    if q <= 0.0 {
        return 0.0;
    }
    if q.is_infinite() {
        return 1.0;
    }
    if df > DF_LIMIT {
        return range_cdf(q, k);
    }
    let half = 0.5 * df;
    let log_norm = half * df.ln() - ln_gamma(half) - (half - 1.0) * LN_2;
    let density = |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        (log_norm + (df - 1.0) * s.ln() - half * s * s).exp()
    };
    let spread = 10.0 / df.sqrt();
    let lo = (1.0 - spread).max(0.0);
    let hi = 1.0 + spread;
    integrate(|s| density(s) * range_cdf(q * s, k), lo, hi, OUTER_TOL).clamp(0.0, 1.0)
}

/// P(Q > q), the p-value of an observed studentized range.
pub fn ptukey_sf(q: f64, k: u32, df: f64) -> f64 {
    (1.0 - ptukey(q, k, df)).clamp(0.0, 1.0)
}

/// Critical value q with P(Q > q) = `alpha`.
pub fn qtukey(alpha: f64, k: u32, df: f64) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    let target = 1.0 - alpha;
    let mut lo = 0.0;
    let mut hi = 4.0;
    while ptukey(hi, k, df) < target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return f64::INFINITY;
        }
    }
    let (mut f_lo, mut f_hi) = (-target, ptukey(hi, k, df) - target);
    // Illinois variant of regula falsi
    let mut side = 0i8;
    for _ in 0..200 {
        let x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        let fx = ptukey(x, k, df) - target;
        if fx.abs() < 1e-12 || hi - lo < 1e-10 {
            return x;
        }
        if fx > 0.0 {
            hi = x;
            f_hi = fx;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        } else {
            lo = x;
            f_lo = fx;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_and_chi_square_reference_points() {
        assert!((f_sf(13.5, 1.0, 4.0) - 0.021_311).abs() < 1e-5);
        assert!((chi_square_sf(20.0 / 3.0, 1.0) - 0.009_823).abs() < 1e-5);
        assert_eq!(f_sf(0.0, 3.0, 7.0), 1.0);
        assert_eq!(f_sf(f64::INFINITY, 3.0, 7.0), 0.0);
        // χ²(2) has an exponential tail
        assert!((chi_square_sf(3.0, 2.0) - (-1.5f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn range_of_two_normals_is_a_folded_normal() {
        for w in [0.3, 1.0, 2.5, 4.0] {
            let exact = 1.0 - 2.0 * normal_sf(w / 2f64.sqrt());
            assert!((range_cdf(w, 2) - exact).abs() < 1e-10, "w={w}");
        }
    }

    #[test]
    fn k_two_matches_the_f_distribution() {
        for (q, df) in [(1.0, 3.0), (2.7, 10.0), (4.1, 25.0), (3.3, 120.0)] {
            let via_f = f_sf(q * q / 2.0, 1.0, df);
            assert!((ptukey_sf(q, 2, df) - via_f).abs() < 1e-8, "q={q} df={df}");
        }
    }

    #[test]
    fn published_critical_values() {
        // upper 5% points of the studentized range
        for (k, df, q) in [(3, 10.0, 3.877), (2, 5.0, 3.635), (5, 20.0, 4.232), (4, 60.0, 3.737), (10, 30.0, 4.824)] {
            let got = qtukey(0.05, k, df);
            assert!((got - q).abs() < 0.005, "k={k} df={df}: {got}");
        }
        assert!((qtukey(0.01, 3, 10.0) - 5.270).abs() < 0.005);
    }
}
