//! Model of two time-bin weak-coherent-state transmitters, lossy channels and
//! a beam-splitter Bell-state measurement with threshold detectors.
//!
//! Each user's pulse pair is a coherent state over an early and a late bin.
//! Partial indistinguishability `ξ` is modelled as a mode overlap: the part of
//! Bob's light that overlaps Alice's mode interferes, the rest adds
//! incoherently. The random phase between the users is averaged by a periodic
//! trapezoid rule, which is exact for these trigonometric integrands once the
//! node count exceeds their bandwidth.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{MeasurementSet, ProtocolParameters};

pub const MIN_QUADRATURE_POINTS: usize = 16;
pub const DEFAULT_QUADRATURE_POINTS: usize = 256;
/// Attenuation of the ultra-low-loss fibre used to label losses as distances.
pub const FIBRE_LOSS_DB_PER_KM: f64 = 0.16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemModel {
    pub channel_loss_db_per_arm: f64,
    pub detector_efficiency: f64,
    pub node_insertion_loss_db: f64,
    pub dark_count_prob_per_gate: f64,
    pub xi: f64,
    pub clock_hz: f64,
    pub time_bin_separation_s: f64,
    pub pulse_duration_s: f64,
    /// Extra phase on Bob's late bin relative to his early bin.
    pub misalignment_phase_rad: f64,
    /// Phenomenological Z-basis error probability per announced event.
    pub z_error_floor: f64,
    pub quadrature_points: usize,
}

impl Default for SystemModel {
    fn default() -> Self {
        Self {
            channel_loss_db_per_arm: 0.0,
            detector_efficiency: 0.73,
            node_insertion_loss_db: 1.4,
            dark_count_prob_per_gate: 40.0 * 300e-12,
            xi: 1.0,
            clock_hz: 1e9,
            time_bin_separation_s: 500e-12,
            pulse_duration_s: 75e-12,
            misalignment_phase_rad: 0.0,
            z_error_floor: 0.0,
            quadrature_points: DEFAULT_QUADRATURE_POINTS,
        }
    }
}

impl SystemModel {
    /// Published device parameters with ideal interference, at `total_loss_db`
    /// split evenly between the two arms.
    pub fn paper(total_loss_db: f64) -> Self {
        Self::default().with_total_loss(total_loss_db)
    }

    /// Published device parameters plus the two imperfections fitted to the
    /// measured tables: mode overlap 0.97 (HOM visibility ≈ 0.47) and a 0.8 %
    /// Z-basis error floor.
    pub fn calibrated(total_loss_db: f64) -> Self {
        Self {
            xi: 0.97,
            z_error_floor: 0.008,
            ..Self::paper(total_loss_db)
        }
    }

    pub fn with_total_loss(mut self, total_loss_db: f64) -> Self {
        self.channel_loss_db_per_arm = 0.5 * total_loss_db;
        self
    }

    pub fn total_loss_db(&self) -> f64 {
        2.0 * self.channel_loss_db_per_arm
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, x: f64| {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(Error::InvalidModel(format!("{name} = {x} not in [0, 1]")))
            }
        };
        prob("detector_efficiency", self.detector_efficiency)?;
        prob("dark_count_prob_per_gate", self.dark_count_prob_per_gate)?;
        prob("xi", self.xi)?;
        prob("z_error_floor", self.z_error_floor)?;
        for (name, x) in [
            ("channel_loss_db_per_arm", self.channel_loss_db_per_arm),
            ("node_insertion_loss_db", self.node_insertion_loss_db),
        ] {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(Error::InvalidModel(format!("{name} = {x} must be a finite loss >= 0")));
            }
        }
        if !(self.clock_hz > 0.0 && self.clock_hz.is_finite()) {
            return Err(Error::InvalidModel(format!("clock_hz = {} must be > 0", self.clock_hz)));
        }
        if !(self.pulse_duration_s > 0.0) {
            return Err(Error::InvalidModel("pulse_duration_s must be > 0".into()));
        }
        if !(self.time_bin_separation_s >= 0.0 && self.time_bin_separation_s <= 1.0 / self.clock_hz) {
            return Err(Error::InvalidModel(format!(
                "time_bin_separation_s = {} must lie within one clock period",
                self.time_bin_separation_s
            )));
        }
        if !self.misalignment_phase_rad.is_finite() {
            return Err(Error::InvalidModel("misalignment_phase_rad must be finite".into()));
        }
        if self.quadrature_points < MIN_QUADRATURE_POINTS {
            return Err(Error::InvalidModel(format!(
                "quadrature_points = {} is below the minimum of {MIN_QUADRATURE_POINTS}",
                self.quadrature_points
            )));
        }
        Ok(())
    }

    /// Transmission of one arm's fibre.
    pub fn arm_transmission(&self) -> f64 {
        10f64.powf(-self.channel_loss_db_per_arm / 10.0)
    }

    /// Detector efficiency times the node's insertion loss.
    pub fn detection_efficiency(&self) -> f64 {
        self.detector_efficiency * 10f64.powf(-self.node_insertion_loss_db / 10.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellOutcome {
    pub p_singlet: f64,
    pub p_error_given_singlet: f64,
}

/// Threshold-detector click probability for light of mean photon number
/// `intensity` arriving at the node.
pub fn click_probability(intensity: f64, model: &SystemModel) -> f64 {
    // 1 − (1 − p_d)e^{−ηI}, arranged to keep precision when both terms are tiny
    let pd = model.dark_count_prob_per_gate;
    let eta = model.detection_efficiency();
    pd + (1.0 - pd) * -(-eta * intensity).exp_m1()
}

/// Detector slots in the order used by click patterns: bit `k` of a pattern
/// index is set when slot `k` clicked.
pub const SLOTS: [&str; 4] = ["D1 early", "D2 early", "D1 late", "D2 late"];
/// Ψ⁻ announcements: D1 early with D2 late, or D1 late with D2 early.
pub const SINGLET_PATTERNS: [usize; 2] = [0b1001, 0b0110];

/// Mean photon number and phase of one user's light in each bin, after the
/// channel but before the node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinField {
    pub intensity: [f64; 2],
    pub phase: [f64; 2],
}

/// Field of one user's time-bin state for `bit` in `basis`. `late_phase` is
/// added to the late bin.
pub fn encode(basis: Basis, bit: u8, mu: f64, transmission: f64, late_phase: f64) -> BinField {
    let m = mu * transmission;
    match basis {
        Basis::Z => {
            let intensity = if bit == 0 { [m, 0.0] } else { [0.0, m] };
            BinField {
                intensity,
                phase: [0.0, late_phase],
            }
        }
        Basis::X => BinField {
            intensity: [0.5 * m, 0.5 * m],
            phase: [0.0, PI * f64::from(bit) + late_phase],
        },
    }
}

/// Mean photon number arriving at each detector slot for inter-user phase `theta`.
pub fn slot_intensities(alice: &BinField, bob: &BinField, theta: f64, model: &SystemModel) -> [f64; 4] {
    let mut out = [0.0; 4];
    for bin in 0..2 {
        let a = alice.intensity[bin];
        let b = bob.intensity[bin];
        let cross = 2.0 * model.xi * (a * b).sqrt() * (theta + alice.phase[bin] - bob.phase[bin]).cos();
        out[2 * bin] = 0.5 * (a + b + cross);
        out[2 * bin + 1] = 0.5 * (a + b - cross).max(0.0);
    }
    out
}

fn check_inputs(mu_a: f64, mu_b: f64, model: &SystemModel) -> Result<()> {
    model.validate()?;
    for mu in [mu_a, mu_b] {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::domain("bell_outcome", mu, "finite flux >= 0"));
        }
    }
    Ok(())
}

/// Phase-averaged probability of each of the 16 click patterns.
pub fn click_pattern_distribution(
    basis: Basis,
    bit_a: u8,
    bit_b: u8,
    mu_a: f64,
    mu_b: f64,
    model: &SystemModel,
) -> Result<[f64; 16]> {
    check_inputs(mu_a, mu_b, model)?;
    let t = model.arm_transmission();
    let alice = encode(basis, bit_a, mu_a, t, 0.0);
    let bob = encode(basis, bit_b, mu_b, t, model.misalignment_phase_rad);
    let k = model.quadrature_points;
    let mut dist = [0.0; 16];
    for step in 0..k {
        let theta = 2.0 * PI * step as f64 / k as f64;
        let slots = slot_intensities(&alice, &bob, theta, model);
        let click = slots.map(|i| click_probability(i, model));
        for (pattern, p) in dist.iter_mut().enumerate() {
            let mut prob = 1.0;
            for (s, c) in click.iter().enumerate() {
                prob *= if pattern >> s & 1 == 1 { *c } else { 1.0 - c };
            }
            *p += prob;
        }
    }
    dist.iter_mut().for_each(|p| *p /= k as f64);
    Ok(dist)
}

/// Probability of a Ψ⁻ announcement and of the announced bits being wrong.
///
/// Ψ⁻ implies anticorrelated bits in both bases, so equal bits are errors.
/// In the Z basis the result is mixed with the model's error floor.
pub fn bell_outcome(
    basis: Basis,
    bit_a: u8,
    bit_b: u8,
    mu_a: f64,
    mu_b: f64,
    model: &SystemModel,
) -> Result<BellOutcome> {
    if bit_a > 1 || bit_b > 1 {
        return Err(Error::InvalidInput(format!("bits must be 0 or 1, got ({bit_a}, {bit_b})")));
    }
    let dist = click_pattern_distribution(basis, bit_a, bit_b, mu_a, mu_b, model)?;
    let p_singlet = SINGLET_PATTERNS.iter().map(|&p| dist[p]).sum::<f64>().clamp(0.0, 1.0);
    let raw_error = if bit_a == bit_b { 1.0 } else { 0.0 };
    let p_error_given_singlet = match basis {
        Basis::Z => model.z_error_floor + (1.0 - 2.0 * model.z_error_floor) * raw_error,
        Basis::X => raw_error,
    };
    Ok(BellOutcome {
        p_singlet,
        p_error_given_singlet,
    })
}

/// Gain and QBER for one intensity pair, averaged over equiprobable bits.
pub fn gain_and_qber(basis: Basis, mu_a: f64, mu_b: f64, model: &SystemModel) -> Result<(f64, f64)> {
    let mut gain = 0.0;
    let mut errors = 0.0;
    for bit_a in 0..2 {
        for bit_b in 0..2 {
            let o = bell_outcome(basis, bit_a, bit_b, mu_a, mu_b, model)?;
            gain += 0.25 * o.p_singlet;
            errors += 0.25 * o.p_singlet * o.p_error_given_singlet;
        }
    }
    let qber = if gain > 0.0 { errors / gain } else { 0.0 };
    Ok((gain, qber))
}

pub fn simulate_measurements(
    params: &ProtocolParameters,
    model: &SystemModel,
    n_total: f64,
) -> Result<MeasurementSet> {
    params.validate()?;
    model.validate()?;
    let (z_gain, z_qber) = gain_and_qber(Basis::Z, params.s, params.s, model)?;
    let mu = params.x_intensities();
    let mut x_gain = [[0.0; 3]; 3];
    let mut x_qber = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            (x_gain[i][j], x_qber[i][j]) = gain_and_qber(Basis::X, mu[i], mu[j], model)?;
        }
    }
    let m = MeasurementSet {
        n_total,
        clock_hz: model.clock_hz,
        params: *params,
        z_gain,
        z_qber,
        x_gain,
        x_qber,
        precision: None,
    };
    m.validate()?;
    Ok(m)
}

/// Photon-number-resolved Ψ⁻ yields `y^{m,n}` (bit-averaged) for
/// `m, n ≤ max_photons`, derived in closed form rather than by quadrature.
///
/// Expanding each click as `1 − (1−p_d)e^{−I}` writes a pattern probability as
/// a signed sum of exponentials of summed slot intensities. The phase average
/// of each exponential is a modified Bessel function `I₀(κ√(μ_a μ_b))`, and the
/// yields are the Taylor coefficients of `e^{μ_a+μ_b}·Q(μ_a, μ_b)`.
pub fn photon_number_yields(basis: Basis, model: &SystemModel, max_photons: usize) -> Result<Vec<Vec<f64>>> {
    model.validate()?;
    let mut total = vec![vec![0.0; max_photons + 1]; max_photons + 1];
    for bit_a in 0..2u8 {
        for bit_b in 0..2u8 {
            let y = singlet_yields(basis, bit_a, bit_b, model, max_photons);
            for m in 0..=max_photons {
                for n in 0..=max_photons {
                    total[m][n] += 0.25 * y[m][n];
                }
            }
        }
    }
    Ok(total)
}

fn singlet_yields(basis: Basis, bit_a: u8, bit_b: u8, model: &SystemModel, max_photons: usize) -> Vec<Vec<f64>> {
    let t = model.arm_transmission();
    let eta = model.detection_efficiency();
    // unit-flux fields; intensities scale linearly with μ
    let alice = encode(basis, bit_a, 1.0, t, 0.0);
    let bob = encode(basis, bit_b, 1.0, t, model.misalignment_phase_rad);
    let keep = 1.0 - model.dark_count_prob_per_gate;

    // Per slot: coefficient of μ_a, of μ_b, and the complex phasor multiplying √(μ_a μ_b) e^{iθ}.
    let mut coef_a = [0.0; 4];
    let mut coef_b = [0.0; 4];
    let mut phasor = [(0.0, 0.0); 4];
    for bin in 0..2 {
        let a = eta * alice.intensity[bin];
        let b = eta * bob.intensity[bin];
        let w = model.xi * (a * b).sqrt();
        let phi = alice.phase[bin] - bob.phase[bin];
        for (port, sign) in [(0, 1.0), (1, -1.0)] {
            let s = 2 * bin + port;
            coef_a[s] = 0.5 * a;
            coef_b[s] = 0.5 * b;
            phasor[s] = (sign * w * phi.cos(), sign * w * phi.sin());
        }
    }

    let ln_fact: Vec<f64> = (0..=max_photons as u32).map(crate::protocol::ln_factorial).collect();
    let mut y = vec![vec![0.0; max_photons + 1]; max_photons + 1];
    for &pattern in &SINGLET_PATTERNS {
        let clicks: Vec<usize> = (0..4).filter(|s| pattern >> s & 1 == 1).collect();
        let quiet: Vec<usize> = (0..4).filter(|s| pattern >> s & 1 == 0).collect();
        // Π_clicks (1 − n_k) Π_quiet n_k = Σ_{S ⊆ clicks} (−1)^{|S|} Π_{quiet ∪ S} n_k
        for subset in 0..(1usize << clicks.len()) {
            let mut set = quiet.clone();
            for (k, &s) in clicks.iter().enumerate() {
                if subset >> k & 1 == 1 {
                    set.push(s);
                }
            }
            let sign = if subset.count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            let weight = sign * keep.powi(set.len() as i32);
            let ca: f64 = set.iter().map(|&s| coef_a[s]).sum();
            let cb: f64 = set.iter().map(|&s| coef_b[s]).sum();
            let (re, im) = set.iter().fold((0.0, 0.0), |(r, i), &s| (r + phasor[s].0, i + phasor[s].1));
            let kappa2 = re * re + im * im;
            // e^{(1−ca)μa + (1−cb)μb} Σ_k (κ² μa μb / 4)^k / (k!)²
            let da = 1.0 - ca;
            let db = 1.0 - cb;
            for m in 0..=max_photons {
                for n in 0..=max_photons {
                    let mut c = 0.0;
                    for k in 0..=m.min(n) {
                        let bessel = if k == 0 { 1.0 } else { (0.25 * kappa2).powi(k as i32) / (ln_fact[k] * 2.0).exp() };
                        c += bessel * da.powi((m - k) as i32) * db.powi((n - k) as i32)
                            / (ln_fact[m - k] + ln_fact[n - k]).exp();
                    }
                    y[m][n] += weight * c * (ln_fact[m] + ln_fact[n]).exp();
                }
            }
        }
    }
    y
}

/// HOM visibility `[C(∞) − C(0)]/C(∞)` of two phase-randomised coherent
/// pulses of flux `mu`, with mode overlap `ξ·exp(−(delay/τ)²)`.
pub fn hom_visibility(mu: f64, delay_s: f64, model: &SystemModel) -> Result<f64> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::domain("hom_visibility", mu, "finite mu > 0"));
    }
    if !delay_s.is_finite() {
        return Err(Error::domain("hom_visibility", delay_s, "finite delay"));
    }
    model.validate()?;
    let c0 = hom_coincidence(mu, mode_overlap(delay_s, model), model);
    let c_inf = hom_coincidence(mu, 0.0, model);
    Ok((c_inf - c0) / c_inf)
}

/// Overlap of two Gaussian pulses whose intensity FWHM is the pulse duration.
pub fn mode_overlap(delay_s: f64, model: &SystemModel) -> f64 {
    let tau = model.pulse_duration_s / 2f64.ln().sqrt();
    model.xi * (-(delay_s / tau).powi(2)).exp()
}

fn hom_coincidence(mu: f64, overlap: f64, model: &SystemModel) -> f64 {
    let i = mu * model.arm_transmission();
    let k = model.quadrature_points;
    (0..k)
        .map(|step| {
            let theta = 2.0 * PI * step as f64 / k as f64;
            let cross = 2.0 * overlap * i * theta.cos();
            click_probability(0.5 * (2.0 * i + cross), model)
                * click_probability(0.5 * (2.0 * i - cross).max(0.0), model)
        })
        .sum::<f64>()
        / k as f64
}

/// `Δφ = 2π·Δt·Δf`.
pub fn phase_error(delta_t_s: f64, delta_f_hz: f64) -> Result<f64> {
    if !(delta_t_s >= 0.0) {
        return Err(Error::domain("phase_error", delta_t_s, "delta_t >= 0"));
    }
    Ok(2.0 * PI * delta_t_s * delta_f_hz)
}

/// Rise of the X-basis QBER above its 25 % floor for phase error `Δφ`.
pub fn x_qber_penalty(delta_phi_rad: f64) -> f64 {
    0.25 * (1.0 - delta_phi_rad.cos())
}

/// Bin separation of equally spaced time bins at `clock_hz`.
pub fn half_period(clock_hz: f64) -> f64 {
    0.5 / clock_hz
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetuningPoint {
    pub delta_f_hz: f64,
    pub clock_hz: f64,
    pub delta_phi_rad: f64,
    pub qber_penalty: f64,
    /// Floor plus penalty, capped at 0.5.
    pub qber: f64,
    /// Floor plus penalty without the cap; reaches 0.75 at `Δφ = π`.
    pub qber_raw: f64,
}

pub fn detuning_point(clock_hz: f64, delta_f_hz: f64) -> Result<DetuningPoint> {
    if !(clock_hz > 0.0 && clock_hz.is_finite()) {
        return Err(Error::domain("detuning_point", clock_hz, "clock_hz > 0"));
    }
    if !delta_f_hz.is_finite() {
        return Err(Error::domain("detuning_point", delta_f_hz, "finite detuning"));
    }
    let delta_phi_rad = phase_error(half_period(clock_hz), delta_f_hz)?;
    let qber_penalty = x_qber_penalty(delta_phi_rad);
    let qber_raw = 0.25 + qber_penalty;
    Ok(DetuningPoint {
        delta_f_hz,
        clock_hz,
        delta_phi_rad,
        qber_penalty,
        qber: qber_raw.min(0.5),
        qber_raw,
    })
}

/// X-basis QBER over a grid, one row per clock rate.
pub fn detuning_map(clocks_hz: &[f64], detunings_hz: &[f64]) -> Result<Vec<Vec<DetuningPoint>>> {
    clocks_hz
        .iter()
        .map(|&c| detunings_hz.iter().map(|&f| detuning_point(c, f)).collect())
        .collect()
}

/// QBER penalty for each sample of a measured detuning series.
pub fn drift_to_qber_series(beat_note_hz: &[f64], clock_hz: f64) -> Result<Vec<f64>> {
    if !(clock_hz > 0.0 && clock_hz.is_finite()) {
        return Err(Error::domain("drift_to_qber_series", clock_hz, "clock_hz > 0"));
    }
    let dt = half_period(clock_hz);
    beat_note_hz
        .iter()
        .enumerate()
        .map(|(k, &f)| {
            if !f.is_finite() {
                return Err(Error::InvalidInput(format!("beat-note sample {k} is not finite ({f})")));
            }
            Ok(x_qber_penalty(phase_error(dt, f)?))
        })
        .collect()
}

/// Density of `x = (1 + cos φ)/2` for uniform `φ`.
pub fn phase_randomization_density(x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::domain("phase_randomization_density", x, "0 < x < 1"));
    }
    Ok(1.0 / (PI * (x * (1.0 - x)).sqrt()))
}

/// Cumulative distribution of [`phase_randomization_density`].
pub fn phase_randomization_cdf(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    2.0 / PI * x.sqrt().asin()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lossless() -> SystemModel {
        SystemModel {
            dark_count_prob_per_gate: 0.0,
            node_insertion_loss_db: 0.0,
            detector_efficiency: 1.0,
            ..SystemModel::paper(0.0)
        }
    }

    #[test]
    fn click_probability_values() {
        let m = SystemModel::paper(0.0);
        assert_eq!(click_probability(0.0, &m), m.dark_count_prob_per_gate);
        let ideal = SystemModel {
            dark_count_prob_per_gate: 0.0,
            ..m
        };
        assert!((click_probability(1e4, &ideal) - 1.0).abs() < 1e-15);
        // η_total = 0.5: detector efficiency 0.5 and no insertion loss
        let half = SystemModel {
            detector_efficiency: 0.5,
            node_insertion_loss_db: 0.0,
            ..ideal
        };
        assert!((click_probability(1.0, &half) - 0.393_469_340_287_366_6).abs() < 1e-15);
    }

    #[test]
    fn vacuum_without_dark_counts_never_announces() {
        let m = lossless();
        for basis in [Basis::Z, Basis::X] {
            assert_eq!(bell_outcome(basis, 0, 1, 0.0, 0.0, &m).unwrap().p_singlet, 0.0);
        }
    }

    #[test]
    fn pattern_distribution_is_normalised() {
        let m = SystemModel::calibrated(10.0);
        let d = click_pattern_distribution(Basis::X, 0, 1, 0.4, 0.2, &m).unwrap();
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn x_floor_is_one_quarter_with_ideal_interference() {
        let m = lossless();
        let (_, e) = gain_and_qber(Basis::X, 1e-3, 1e-3, &m).unwrap();
        assert!((e - 0.25).abs() < 1e-3, "{e}");
        let (_, ez) = gain_and_qber(Basis::Z, 0.3, 0.3, &m).unwrap();
        assert!(ez < 1e-12);
    }

    #[test]
    fn quadrature_order_is_checked() {
        let m = SystemModel {
            quadrature_points: 8,
            ..SystemModel::paper(0.0)
        };
        assert!(matches!(bell_outcome(Basis::X, 0, 0, 0.1, 0.1, &m), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn closed_form_yields_reproduce_quadrature_gain() {
        let model = SystemModel::calibrated(20.0);
        let y = photon_number_yields(Basis::X, &model, 12).unwrap();
        for &(a, b) in &[(0.24, 0.24), (0.24, 0.047), (0.047, 2e-4)] {
            let (q, _) = gain_and_qber(Basis::X, a, b, &model).unwrap();
            let mut mix = 0.0;
            for m in 0..=12 {
                for n in 0..=12 {
                    mix += crate::protocol::poisson_weight(a, m as u32)
                        * crate::protocol::poisson_weight(b, n as u32)
                        * y[m][n];
                }
            }
            assert!(((mix - q) / q).abs() < 1e-8, "{a} {b}: {mix} vs {q}");
        }
        for row in &y {
            for &v in row {
                assert!((-1e-12..=1.0 + 1e-12).contains(&v));
            }
        }
    }

    #[test]
    fn hom_limits() {
        let m = lossless();
        let v = hom_visibility(1e-3, 0.0, &m).unwrap();
        assert!((v - 0.5).abs() < 1e-3, "{v}");
        assert!(hom_visibility(1e-3, 1e-9, &m).unwrap().abs() < 1e-12);
        let cal = hom_visibility(0.1, 0.0, &SystemModel::calibrated(30.0)).unwrap();
        assert!((0.40..=0.50).contains(&cal), "{cal}");
    }

    #[test]
    fn detuning_closed_forms() {
        let long = phase_error(6.67e-9, 30e6).unwrap();
        assert!((long / PI - 0.4).abs() < 0.01);
        assert!((x_qber_penalty(0.4 * PI) - 0.173).abs() < 1e-3);
        let short = phase_error(500e-12, 30e6).unwrap();
        assert!((short / PI - 0.03).abs() < 1e-12);
        assert!((x_qber_penalty(0.03 * PI) - 0.00111).abs() < 1e-5);
        assert_eq!(phase_error(1e-9, 0.0).unwrap(), 0.0);
        assert!(phase_error(-1.0, 1.0).is_err());
    }

    #[test]
    fn detuning_map_caps_at_one_half() {
        let map = detuning_map(&[1e9], &[0.0, 5e8, 1e9, 2e9]).unwrap();
        let q: Vec<f64> = map[0].iter().map(|p| p.qber).collect();
        assert_eq!(q[0], 0.25);
        assert!((q[1] - 0.5).abs() < 1e-12);
        assert_eq!(q[2], 0.5);
        assert!((map[0][2].qber_raw - 0.75).abs() < 1e-12);
        assert!((q[3] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn drift_series_rejects_non_finite() {
        assert_eq!(drift_to_qber_series(&[0.0, 0.0], 1e9).unwrap(), vec![0.0, 0.0]);
        let err = drift_to_qber_series(&[0.0, f64::NAN], 1e9).unwrap_err();
        assert!(err.to_string().contains("sample 1"));
    }

    #[test]
    fn phase_density_values() {
        assert!((phase_randomization_density(0.5).unwrap() - 2.0 / PI).abs() < 1e-15);
        assert!(phase_randomization_density(0.0).is_err());
        assert!(phase_randomization_density(1.0).is_err());
        assert_eq!(phase_randomization_cdf(1.0), 1.0);
        assert!((phase_randomization_cdf(0.5) - 0.5).abs() < 1e-15);
    }
}
