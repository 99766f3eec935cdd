//! Protocol-level types for the four-intensity decoy-state MDI-QKD protocol and
//! the secure-key-rate formula.
//!
//! Alice and Bob each prepare weak coherent states with one signal intensity
//! `s` (Z basis, key generation) and three decoy intensities `u > v > w` (X
//! basis, parameter estimation). Gains and QBERs measured for every intensity
//! pair feed the decoy linear programs in [`crate::decoy_lp`], whose bounds are
//! turned into a key rate here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite_size::{bound_count, chernoff_g};

/// Tolerance on the unit sum of preparation probabilities.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-9;

/// Default clock rate of the transmitters (Hz).
pub const DEFAULT_CLOCK_HZ: f64 = 1e9;

/// Numerator of the composable finite-size correction `Δ = 300.5 / N_tot`.
pub const COMPOSABLE_CORRECTION_BITS: f64 = 300.5;

/// Intensities and preparation probabilities shared by both users.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParameters {
    pub s: f64,
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub p_z_s: f64,
    pub p_x_u: f64,
    pub p_x_v: f64,
    pub p_x_w: f64,
}

impl ProtocolParameters {
    pub fn new(intensities: [f64; 4], probabilities: [f64; 4]) -> Result<Self> {
        let [s, u, v, w] = intensities;
        let [p_z_s, p_x_u, p_x_v, p_x_w] = probabilities;
        let params = Self {
            s,
            u,
            v,
            w,
            p_z_s,
            p_x_u,
            p_x_v,
            p_x_w,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.s, self.u, self.v, self.w, self.p_z_s, self.p_x_u, self.p_x_v, self.p_x_w,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameters("non-finite value".into()));
        }
        if !(self.s > self.u && self.u > self.v && self.v > self.w && self.w >= 0.0) {
            return Err(Error::InvalidParameters(format!(
                "intensities must satisfy s > u > v > w >= 0 (got s={}, u={}, v={}, w={})",
                self.s, self.u, self.v, self.w
            )));
        }
        for (name, p) in [
            ("p_z_s", self.p_z_s),
            ("p_x_u", self.p_x_u),
            ("p_x_v", self.p_x_v),
            ("p_x_w", self.p_x_w),
        ] {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidParameters(format!(
                    "{name} = {p} is not in (0, 1)"
                )));
            }
        }
        let sum = self.p_z_s + self.p_x_u + self.p_x_v + self.p_x_w;
        if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
            return Err(Error::InvalidParameters(format!(
                "preparation probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }

    /// Decoy intensities in table order `[u, v, w]`.
    pub fn x_intensities(&self) -> [f64; 3] {
        [self.u, self.v, self.w]
    }

    /// Decoy preparation probabilities in table order `[u, v, w]`.
    pub fn x_probabilities(&self) -> [f64; 3] {
        [self.p_x_u, self.p_x_v, self.p_x_w]
    }
}

/// Rounding precision of a published table, used to widen each tabulated
/// gain/QBER into the interval of values that round to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportedPrecision {
    /// Significant figures of every tabulated gain.
    pub gain_significant_figures: u32,
    /// Smallest printed increment of every tabulated QBER (as a fraction).
    pub qber_resolution: f64,
}

impl ReportedPrecision {
    /// Half of one unit in the last printed place of `gain`.
    pub fn gain_half_width(&self, gain: f64) -> f64 {
        if gain <= 0.0 || self.gain_significant_figures == 0 {
            return 0.0;
        }
        let exponent = gain.log10().floor() as i32;
        0.5 * 10f64.powi(exponent - self.gain_significant_figures as i32 + 1)
    }

    pub fn qber_half_width(&self) -> f64 {
        0.5 * self.qber_resolution
    }
}

/// Per-pair gains, QBERs and sample sizes of one protocol run.
///
/// X-basis matrices are indexed `[i][j]` with `i` Alice's and `j` Bob's decoy
/// in the order `u, v, w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    pub n_total: f64,
    pub clock_hz: f64,
    pub params: ProtocolParameters,
    pub z_gain: f64,
    pub z_qber: f64,
    pub x_gain: [[f64; 3]; 3],
    pub x_qber: [[f64; 3]; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<ReportedPrecision>,
}

impl MeasurementSet {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.n_total.is_finite() && self.n_total >= 1.0) {
            return Err(Error::InvalidMeasurements(format!(
                "n_total = {} must be a finite count >= 1",
                self.n_total
            )));
        }
        if !(self.clock_hz.is_finite() && self.clock_hz > 0.0) {
            return Err(Error::InvalidMeasurements(format!(
                "clock_hz = {} must be positive",
                self.clock_hz
            )));
        }
        let unit = |name: String, x: f64| -> Result<()> {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(Error::InvalidMeasurements(format!("{name} = {x} not in [0, 1]")))
            }
        };
        unit("z_gain".into(), self.z_gain)?;
        unit("z_qber".into(), self.z_qber)?;
        for i in 0..3 {
            for j in 0..3 {
                unit(format!("x_gain[{i}][{j}]"), self.x_gain[i][j])?;
                unit(format!("x_qber[{i}][{j}]"), self.x_qber[i][j])?;
            }
        }
        if self.n_z() < 1.0 {
            return Err(Error::InvalidMeasurements(format!(
                "derived Z sample size {} < 1",
                self.n_z()
            )));
        }
        for i in 0..3 {
            for j in 0..3 {
                if self.n_x(i, j) < 1.0 {
                    return Err(Error::InvalidMeasurements(format!(
                        "derived X sample size for pair ({i},{j}) is {} < 1",
                        self.n_x(i, j)
                    )));
                }
            }
        }
        if let Some(p) = self.precision {
            if !(p.qber_resolution >= 0.0 && p.qber_resolution.is_finite()) {
                return Err(Error::InvalidMeasurements(
                    "precision.qber_resolution must be a non-negative number".into(),
                ));
            }
        }
        Ok(())
    }

    /// Number of (s, s) Z-basis preparations, `P_Z² · N_tot`.
    pub fn n_z(&self) -> f64 {
        self.params.p_z_s * self.params.p_z_s * self.n_total
    }

    /// Number of X-basis preparations with decoys `(i, j)`.
    pub fn n_x(&self, i: usize, j: usize) -> f64 {
        let p = self.params.x_probabilities();
        p[i] * p[j] * self.n_total
    }

    /// Interval of gains consistent with the reported precision.
    pub fn x_gain_interval(&self, i: usize, j: usize) -> (f64, f64) {
        let q = self.x_gain[i][j];
        match self.precision {
            Some(p) => {
                let d = p.gain_half_width(q);
                ((q - d).max(0.0), (q + d).min(1.0))
            }
            None => (q, q),
        }
    }

    /// Interval of bit-error rates `B = Q·E` consistent with the reported precision.
    pub fn x_ber_interval(&self, i: usize, j: usize) -> (f64, f64) {
        let (q_lo, q_hi) = self.x_gain_interval(i, j);
        let e = self.x_qber[i][j];
        let d = self.precision.map_or(0.0, |p| p.qber_half_width());
        let e_lo = (e - d).max(0.0);
        let e_hi = (e + d).min(1.0);
        (q_lo * e_lo, (q_hi * e_hi).min(1.0))
    }
}

/// Which security analysis turns measurements into bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisVariant {
    Asymptotic,
    FiniteGaussian,
    FiniteComposable,
}

impl AnalysisVariant {
    pub const ALL: [AnalysisVariant; 3] = [
        AnalysisVariant::Asymptotic,
        AnalysisVariant::FiniteGaussian,
        AnalysisVariant::FiniteComposable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AnalysisVariant::Asymptotic => "asymptotic",
            AnalysisVariant::FiniteGaussian => "gaussian",
            AnalysisVariant::FiniteComposable => "composable",
        }
    }
}

/// How the error-correction leakage term is normalised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LeakNormalization {
    /// `f_EC · P_Z² · Q_Z^{s,s} · h(E_Z^{s,s})`: leakage per clock cycle, on
    /// the same footing as the single-photon term, which already carries `P_Z²`.
    #[default]
    PerClock,
    /// `f_EC · Q_Z^{s,s} · h(E_Z^{s,s})` with the gain taken per (s, s) pair.
    PerSignalPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityAnalysis {
    pub variant: AnalysisVariant,
    /// Standard deviations in the Gaussian fluctuation function.
    pub n_sigma: f64,
    /// Per-bound failure probability of the Chernoff analysis.
    pub epsilon_0: f64,
    /// Photon-number truncation of the decoy linear programs.
    pub s_cut: usize,
    /// Fluctuation allowance converting the X-basis yield to the Z basis.
    pub theta_yield: f64,
    /// Error-correction inefficiency.
    pub f_ec: f64,
    #[serde(default)]
    pub leak: LeakNormalization,
}

impl SecurityAnalysis {
    pub const DEFAULT_N_SIGMA: f64 = 7.0;
    pub const DEFAULT_EPSILON_0: f64 = 4e-13;
    pub const DEFAULT_S_CUT: usize = 15;
    pub const DEFAULT_THETA_YIELD: f64 = 1.5e-6;
    pub const DEFAULT_F_EC: f64 = 1.16;

    pub fn new(variant: AnalysisVariant) -> Self {
        Self {
            variant,
            n_sigma: Self::DEFAULT_N_SIGMA,
            epsilon_0: Self::DEFAULT_EPSILON_0,
            s_cut: Self::DEFAULT_S_CUT,
            theta_yield: Self::DEFAULT_THETA_YIELD,
            f_ec: Self::DEFAULT_F_EC,
            leak: LeakNormalization::default(),
        }
    }

    pub fn asymptotic() -> Self {
        Self::new(AnalysisVariant::Asymptotic)
    }

    pub fn finite_gaussian() -> Self {
        Self::new(AnalysisVariant::FiniteGaussian)
    }

    pub fn finite_composable() -> Self {
        Self::new(AnalysisVariant::FiniteComposable)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n_sigma > 0.0 && self.n_sigma.is_finite()) {
            return Err(Error::InvalidAnalysis(format!("n_sigma = {} must be > 0", self.n_sigma)));
        }
        if !(self.epsilon_0 > 0.0 && self.epsilon_0 < 1.0) {
            return Err(Error::InvalidAnalysis(format!(
                "epsilon_0 = {} must be in (0, 1)",
                self.epsilon_0
            )));
        }
        if self.s_cut < 2 {
            return Err(Error::InvalidAnalysis(format!("s_cut = {} must be >= 2", self.s_cut)));
        }
        if !(self.theta_yield >= 0.0 && self.theta_yield.is_finite()) {
            return Err(Error::InvalidAnalysis(format!(
                "theta_yield = {} must be >= 0",
                self.theta_yield
            )));
        }
        if !(self.f_ec >= 1.0 && self.f_ec.is_finite()) {
            return Err(Error::InvalidAnalysis(format!("f_ec = {} must be >= 1", self.f_ec)));
        }
        Ok(())
    }

    pub fn is_finite_size(&self) -> bool {
        self.variant != AnalysisVariant::Asymptotic
    }
}

/// Single-photon quantities estimated by the decoy linear programs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YieldBounds {
    pub y_x_11_lower: f64,
    pub e_x_11_upper: f64,
    pub y_z_11_lower: f64,
    /// Upper bound on the single-photon bit-error yield `b_X^{1,1}`.
    pub b_x_11_upper: f64,
}

impl YieldBounds {
    pub fn validate(&self) -> Result<()> {
        for (name, x) in [
            ("y_x_11_lower", self.y_x_11_lower),
            ("e_x_11_upper", self.e_x_11_upper),
            ("y_z_11_lower", self.y_z_11_lower),
        ] {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::InvalidInput(format!("{name} = {x} not in [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateReport {
    /// Secure bits per clock cycle, clamped at zero.
    pub rate_per_clock: f64,
    pub rate_bps: f64,
    /// Unclamped value of the rate formula (bits per clock cycle).
    pub raw_rate_per_clock: f64,
    pub no_key: bool,
    pub analysis: SecurityAnalysis,
    pub bounds: YieldBounds,
    pub q_z_11: f64,
    pub ec_leak: f64,
    pub delta: f64,
}

/// Binary Shannon entropy in bits, with `0·log₂0 = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain("binary_entropy", p, "0 <= p <= 1"));
    }
    let term = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    Ok(term(p) + term(1.0 - p))
}

const LN_FACTORIAL_TABLE_LEN: usize = 171;

fn ln_factorial_table() -> &'static [f64; LN_FACTORIAL_TABLE_LEN] {
    use std::sync::OnceLock;
    static TABLE: OnceLock<[f64; LN_FACTORIAL_TABLE_LEN]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0; LN_FACTORIAL_TABLE_LEN];
        for k in 1..LN_FACTORIAL_TABLE_LEN {
            t[k] = t[k - 1] + (k as f64).ln();
        }
        t
    })
}

/// `ln(n!)`, tabulated up to 170 and Stirling's series beyond.
pub fn ln_factorial(n: u32) -> f64 {
    let n_us = n as usize;
    if n_us < LN_FACTORIAL_TABLE_LEN {
        return ln_factorial_table()[n_us];
    }
    let x = n as f64 + 1.0;
    // ln Γ(x) for large x
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x.powi(3))
        + 1.0 / (1260.0 * x.powi(5))
}

/// Poisson probability `e^{-μ} μⁿ / n!`.
pub fn poisson_weight(mu: f64, n: u32) -> f64 {
    debug_assert!(mu >= 0.0);
    if mu == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (-mu + n as f64 * mu.ln() - ln_factorial(n)).exp()
}

/// Lower bound on the single-photon Z-basis contribution per clock cycle.
pub fn q_z_11(
    bounds: &YieldBounds,
    params: &ProtocolParameters,
    analysis: &SecurityAnalysis,
    n_total: f64,
) -> Result<f64> {
    let y = bounds.y_z_11_lower;
    if y < 0.0 {
        return Err(Error::domain("q_z_11", y, "y_z_11_lower >= 0"));
    }
    if params.s < 0.0 || params.p_z_s < 0.0 {
        return Err(Error::InvalidParameters("negative signal intensity or probability".into()));
    }
    let s = params.s;
    match analysis.variant {
        AnalysisVariant::Asymptotic | AnalysisVariant::FiniteGaussian => {
            let single = params.p_z_s * s * (-s).exp();
            Ok(y * single * single)
        }
        AnalysisVariant::FiniteComposable => {
            if !(n_total >= 1.0) {
                return Err(Error::domain("q_z_11", n_total, "n_total >= 1"));
            }
            let n_z = params.p_z_s * params.p_z_s * n_total;
            let n_z_lower = bound_count(n_z, analysis.epsilon_0)?.lower;
            let expected = s * s * (-2.0 * s).exp() * y * n_z_lower;
            let fluctuation = chernoff_g(expected, analysis.epsilon_0)?;
            Ok((expected - fluctuation).abs().max(0.0) / n_total)
        }
    }
}

/// Lower bound on the secure key rate from the measured Z-basis gain/QBER and
/// the decoy estimates.
///
/// Negative values of the formula are clamped to zero and flagged `no_key`.
pub fn secure_key_rate(
    measurements: &MeasurementSet,
    bounds: &YieldBounds,
    analysis: &SecurityAnalysis,
) -> Result<KeyRateReport> {
    analysis.validate()?;
    bounds.validate()?;
    let params = &measurements.params;
    let q11 = q_z_11(bounds, params, analysis, measurements.n_total)?;
    let weight = match analysis.leak {
        LeakNormalization::PerClock => params.p_z_s * params.p_z_s,
        LeakNormalization::PerSignalPair => 1.0,
    };
    let ec_leak =
        analysis.f_ec * weight * measurements.z_gain * binary_entropy(measurements.z_qber)?;
    let delta = match analysis.variant {
        AnalysisVariant::FiniteComposable => COMPOSABLE_CORRECTION_BITS / measurements.n_total,
        _ => 0.0,
    };
    // an upper bound at or above one half certifies nothing about the phase error
    let phase_error = bounds.e_x_11_upper.min(0.5);
    let raw = q11 * (1.0 - binary_entropy(phase_error)?) - ec_leak - delta;
    let no_key = !(raw > 0.0);
    let rate = if no_key { 0.0 } else { raw };
    Ok(KeyRateReport {
        rate_per_clock: rate,
        rate_bps: rate * measurements.clock_hz,
        raw_rate_per_clock: raw,
        no_key,
        analysis: *analysis,
        bounds: *bounds,
        q_z_11: q11,
        ec_leak,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params_30db() -> ProtocolParameters {
        ProtocolParameters::new([0.55, 0.24, 0.047, 2e-4], [0.85, 0.01, 0.093, 0.047]).unwrap()
    }

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        // mpmath, 40 digits: h(0.0107) = 0.085398779419917...
        assert!((binary_entropy(0.0107).unwrap() - 0.085_398_779_419_917).abs() < 1e-14);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.0001).is_err());
    }

    #[test]
    fn poisson_weight_values() {
        assert_eq!(poisson_weight(0.0, 0), 1.0);
        assert_eq!(poisson_weight(0.0, 1), 0.0);
        // mpmath: 0.55 * exp(-0.55) = 0.317322395709267...
        assert!((poisson_weight(0.55, 1) - 0.317_322_395_709_268).abs() < 1e-14);
        // large n goes through the Stirling branch without overflow
        assert!(poisson_weight(200.0, 200) > 0.0);
        // mpmath: e^-200 200^200 / 200! = 0.0281977276859208...
        assert!((poisson_weight(200.0, 200) - 0.028_197_727_685_920_8).abs() < 1e-12);
    }

    #[test]
    fn ln_factorial_branches_agree() {
        let table = ln_factorial(170);
        let x = 171.0_f64;
        let stirling = (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln()
            + 1.0 / (12.0 * x)
            - 1.0 / (360.0 * x.powi(3));
        assert!((table - stirling).abs() / table < 1e-13);
    }

    #[test]
    fn parameter_validation() {
        assert!(ProtocolParameters::new([0.55, 0.24, 0.047, 2e-4], [0.85, 0.01, 0.093, 0.05])
            .is_err());
        assert!(ProtocolParameters::new([0.24, 0.24, 0.047, 2e-4], [0.85, 0.01, 0.093, 0.047])
            .is_err());
        assert!(params_30db().validate().is_ok());
    }

    #[test]
    fn q_z_11_zero_yield_any_variant() {
        let b = YieldBounds {
            y_x_11_lower: 0.0,
            e_x_11_upper: 1.0,
            y_z_11_lower: 0.0,
            b_x_11_upper: 0.0,
        };
        for v in AnalysisVariant::ALL {
            let q = q_z_11(&b, &params_30db(), &SecurityAnalysis::new(v), 8.64e13).unwrap();
            assert_eq!(q, 0.0);
        }
    }

    #[test]
    fn q_z_11_vanishes_with_signal_intensity() {
        let b = YieldBounds {
            y_x_11_lower: 1.0,
            e_x_11_upper: 0.0,
            y_z_11_lower: 1.0,
            b_x_11_upper: 0.0,
        };
        let mut p = params_30db();
        let mut last = f64::INFINITY;
        for s in [1e-2, 1e-4, 1e-6, 1e-8] {
            p.s = s;
            p.p_z_s = 1.0;
            let q = q_z_11(&b, &p, &SecurityAnalysis::asymptotic(), 1.0).unwrap();
            assert!(q < last);
            last = q;
        }
        assert!(last < 1e-15);
    }

    #[test]
    fn q_z_11_rejects_negative_yield() {
        let b = YieldBounds {
            y_x_11_lower: 0.0,
            e_x_11_upper: 0.0,
            y_z_11_lower: -1e-3,
            b_x_11_upper: 0.0,
        };
        assert!(q_z_11(&b, &params_30db(), &SecurityAnalysis::asymptotic(), 1e9).is_err());
    }

    fn measurements() -> MeasurementSet {
        MeasurementSet {
            n_total: 8.64e13,
            clock_hz: 1e9,
            params: params_30db(),
            z_gain: 1.18e-5,
            z_qber: 0.0107,
            x_gain: [[1e-5; 3]; 3],
            x_qber: [[0.3; 3]; 3],
            precision: None,
        }
    }

    #[test]
    fn maximal_phase_error_gives_no_key() {
        let b = YieldBounds {
            y_x_11_lower: 1.0,
            e_x_11_upper: 0.5,
            y_z_11_lower: 1.0,
            b_x_11_upper: 0.5,
        };
        let mut m = measurements();
        m.z_qber = 0.0;
        let r = secure_key_rate(&m, &b, &SecurityAnalysis::asymptotic()).unwrap();
        assert!(r.raw_rate_per_clock <= 0.0);
        assert!(r.no_key);
        assert_eq!(r.rate_bps, 0.0);
        let worse = YieldBounds {
            e_x_11_upper: 1.0,
            b_x_11_upper: 1.0,
            ..b
        };
        assert!(secure_key_rate(&m, &worse, &SecurityAnalysis::asymptotic()).unwrap().no_key);
    }

    #[test]
    fn rate_formula_terms() {
        let b = YieldBounds {
            y_x_11_lower: 6e-5,
            e_x_11_upper: 0.1,
            y_z_11_lower: 6e-5,
            b_x_11_upper: 6e-6,
        };
        let m = measurements();
        let mut a = SecurityAnalysis::asymptotic();
        let r = secure_key_rate(&m, &b, &a).unwrap();
        let single = 0.85 * 0.55 * (-0.55f64).exp();
        let q = 6e-5 * single * single;
        let leak = 1.16 * 0.85 * 0.85 * 1.18e-5 * binary_entropy(0.0107).unwrap();
        let expected = q * (1.0 - binary_entropy(0.1).unwrap()) - leak;
        assert!((r.raw_rate_per_clock - expected).abs() < 1e-18);
        assert!((r.rate_bps - expected * 1e9).abs() < 1e-9);

        a.leak = LeakNormalization::PerSignalPair;
        let r2 = secure_key_rate(&m, &b, &a).unwrap();
        assert!((r2.ec_leak - leak / (0.85 * 0.85)).abs() < 1e-18);
    }

    #[test]
    fn composable_delta() {
        let b = YieldBounds {
            y_x_11_lower: 6e-5,
            e_x_11_upper: 0.1,
            y_z_11_lower: 6e-5,
            b_x_11_upper: 6e-6,
        };
        let r = secure_key_rate(&measurements(), &b, &SecurityAnalysis::finite_composable())
            .unwrap();
        assert!((r.delta - 300.5 / 8.64e13).abs() < 1e-25);
    }

    #[test]
    fn reported_precision_half_widths() {
        let p = ReportedPrecision {
            gain_significant_figures: 3,
            qber_resolution: 1e-3,
        };
        assert!((p.gain_half_width(6.41e-6) - 0.005e-6).abs() < 1e-20);
        assert!((p.gain_half_width(1.18e-5) - 0.005e-5).abs() < 1e-20);
        assert!((p.gain_half_width(7.32e-12) - 0.005e-12).abs() < 1e-26);
        assert_eq!(p.qber_half_width(), 5e-4);
    }
}
