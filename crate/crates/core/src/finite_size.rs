//! Statistical fluctuation bounds for finite samples: the Gaussian fluctuation
//! function and multiplicative Chernoff bounds on counts and rates.
//!
//! Counts are real-valued throughout. Counts reconstructed from published
//! gains (`C = Q·N`) are generally not integers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative fluctuation `n / √ζ` of an expected count `ζ` at `n` standard deviations.
pub fn gaussian_fluctuation(zeta: f64, n_sigma: f64) -> Result<f64> {
    if !(zeta > 0.0) {
        return Err(Error::domain("gaussian_fluctuation", zeta, "zeta > 0"));
    }
    if !(n_sigma > 0.0) {
        return Err(Error::domain("gaussian_fluctuation", n_sigma, "n_sigma > 0"));
    }
    Ok(n_sigma / zeta.sqrt())
}

/// `g(x, y) = √(x · ln(y⁻²))`.
pub fn chernoff_g(x: f64, y: f64) -> Result<f64> {
    if !(y > 0.0 && y < 1.0) {
        return Err(Error::domain("chernoff_g", y, "0 < y < 1"));
    }
    chernoff_g_ln(x, y.ln())
}

/// `g` evaluated from `ln y`, so that `y = ε⁴` never underflows.
fn chernoff_g_ln(x: f64, ln_y: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::domain("chernoff_g", x, "finite x >= 0"));
    }
    Ok((x * (-2.0 * ln_y)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundedCount {
    pub observed: f64,
    pub upper: f64,
    pub lower: f64,
    pub epsilon_0: f64,
}

/// Chernoff bounds `N + g(N, ε₀²)` and `max{N − g(N, ε₀⁴), 0}`.
pub fn bound_count(observed: f64, epsilon_0: f64) -> Result<BoundedCount> {
    if !(epsilon_0 > 0.0 && epsilon_0 < 1.0) {
        return Err(Error::domain("bound_count", epsilon_0, "0 < epsilon_0 < 1"));
    }
    let ln_eps = epsilon_0.ln();
    let upper = observed + chernoff_g_ln(observed, 2.0 * ln_eps)?;
    let lower = (observed - chernoff_g_ln(observed, 4.0 * ln_eps)?).max(0.0);
    Ok(BoundedCount {
        observed,
        upper,
        lower,
        epsilon_0,
    })
}

/// Bounds for a count known only to lie in `[lo, hi]`: the lower Chernoff bound
/// of `lo` and the upper Chernoff bound of `hi`.
pub fn bound_count_interval(lo: f64, hi: f64, epsilon_0: f64) -> Result<BoundedCount> {
    if lo > hi {
        return Err(Error::InvalidInput(format!("count interval [{lo}, {hi}] is empty")));
    }
    let l = bound_count(lo, epsilon_0)?;
    let h = bound_count(hi, epsilon_0)?;
    Ok(BoundedCount {
        observed: 0.5 * (lo + hi),
        upper: h.upper,
        lower: l.lower,
        epsilon_0,
    })
}

/// Bounded sample size, Bell-state count and erroneous count of one flux pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCounts {
    pub sent: BoundedCount,
    pub detected: BoundedCount,
    pub errors: BoundedCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBounds {
    pub q_upper: f64,
    pub q_lower: f64,
    pub b_upper: f64,
    pub b_lower: f64,
    /// Set when the lower bound on the sample size vanished and the upper
    /// rates fell back to the worst case of 1.
    pub degenerate_sample: bool,
}

impl RateBounds {
    pub fn from_counts(counts: &PairCounts) -> Self {
        let n_lo = counts.sent.lower;
        let n_hi = counts.sent.upper;
        let degenerate_sample = !(n_lo > 0.0);
        let over = |c: f64| if degenerate_sample { 1.0 } else { (c / n_lo).min(1.0) };
        let under = |c: f64| if n_hi > 0.0 { (c / n_hi).min(1.0) } else { 0.0 };
        Self {
            q_upper: over(counts.detected.upper),
            q_lower: under(counts.detected.lower),
            b_upper: over(counts.errors.upper),
            b_lower: under(counts.errors.lower),
            degenerate_sample,
        }
    }
}

/// Bounded gains and bit-error rates for each `(μ_i, μ_j)` decoy pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundedRates {
    pub pairs: [[RateBounds; 3]; 3],
}

impl BoundedRates {
    pub fn any_degenerate(&self) -> bool {
        self.pairs.iter().flatten().any(|r| r.degenerate_sample)
    }
}

/// `Q̅ = C̅/N̲`, `Q̲ = C̲/N̅`, `B̅ = EC̅/N̲`, `B̲ = EC̲/N̅` for every pair.
pub fn bound_rates(counts: &[[PairCounts; 3]; 3]) -> BoundedRates {
    let pairs = std::array::from_fn(|i| std::array::from_fn(|j| RateBounds::from_counts(&counts[i][j])));
    BoundedRates { pairs }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fluctuation_values() {
        assert_eq!(gaussian_fluctuation(49.0, 7.0).unwrap(), 1.0);
        // mpmath: 7/sqrt(4.9e13 * 1e-5) = 3.16227766016838e-4
        let f = gaussian_fluctuation(4.9e13 * 1e-5, 7.0).unwrap();
        assert!((f - 3.162_277_660_168_38e-4).abs() < 1e-17);
        assert!(gaussian_fluctuation(1e300, 7.0).unwrap() < 1e-149);
        assert!(gaussian_fluctuation(0.0, 7.0).is_err());
        assert!(gaussian_fluctuation(-1.0, 7.0).is_err());
        assert!(gaussian_fluctuation(1.0, 0.0).is_err());
    }

    #[test]
    fn chernoff_g_values() {
        assert_eq!(chernoff_g(0.0, 0.3).unwrap(), 0.0);
        assert!((chernoff_g(1.0, (-0.5f64).exp()).unwrap() - 1.0).abs() < 1e-15);
        // mpmath: g(1e6, (4e-13)^2) = 10685.936898148464
        let g = chernoff_g(1e6, 4e-13f64 * 4e-13).unwrap();
        assert!((g - 10_685.936_898_148_464).abs() < 1e-8);
        assert!(chernoff_g(-1.0, 0.5).is_err());
        assert!(chernoff_g(1.0, 0.0).is_err());
        assert!(chernoff_g(1.0, 1.0).is_err());
    }

    #[test]
    fn bound_count_values() {
        let zero = bound_count(0.0, 4e-13).unwrap();
        assert_eq!((zero.observed, zero.upper, zero.lower), (0.0, 0.0, 0.0));

        // mpmath: N = 8.64e13 * 0.85^2
        let n = 8.64e13 * 0.85 * 0.85;
        let b = bound_count(n, 4e-13).unwrap();
        assert!((b.upper - 62_424_084_428_369.516).abs() < 0.1);
        assert!((b.lower - 62_423_880_600_254.781).abs() < 0.1);
        assert!(((b.upper - n) / n - 1.35e-6).abs() < 1e-7);

        assert_eq!(bound_count(3.0, 4e-13).unwrap().lower, 0.0);
    }

    #[test]
    fn tiny_epsilon_does_not_underflow() {
        let b = bound_count(1e6, 1e-100).unwrap();
        assert!(b.upper.is_finite() && b.upper > 1e6);
    }

    #[test]
    fn zero_detections_give_zero_rates() {
        let sent = bound_count(1e9, 4e-13).unwrap();
        let none = bound_count(0.0, 4e-13).unwrap();
        let r = RateBounds::from_counts(&PairCounts {
            sent,
            detected: none,
            errors: none,
        });
        assert_eq!((r.q_lower, r.q_upper, r.b_lower, r.b_upper), (0.0, 0.0, 0.0, 0.0));
        assert!(!r.degenerate_sample);
    }

    #[test]
    fn empty_sample_falls_back_to_worst_case() {
        let sent = bound_count(2.0, 4e-13).unwrap();
        assert_eq!(sent.lower, 0.0);
        let c = bound_count(1.0, 4e-13).unwrap();
        let r = RateBounds::from_counts(&PairCounts {
            sent,
            detected: c,
            errors: c,
        });
        assert!(r.degenerate_sample);
        assert_eq!(r.q_upper, 1.0);
        assert_eq!(r.b_upper, 1.0);
    }

    #[test]
    fn interval_bounds_enclose_endpoints() {
        let b = bound_count_interval(100.0, 110.0, 1e-3).unwrap();
        assert!(b.lower < 100.0 && b.upper > 110.0);
        assert!(bound_count_interval(2.0, 1.0, 1e-3).is_err());
    }
}
