//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::PathBuf;

use mdiqkd::cli::MeasurementFile;
use mdiqkd::finite_size::bound_count;
use mdiqkd::physics::{encode, phase_randomization_cdf, phase_randomization_density, Basis, SystemModel, SINGLET_PATTERNS};
use mdiqkd::simplex::{LinearProgram, Relation, Sense};
use mdiqkd::{MeasurementSet, ProtocolParameters};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub const LOSSES_DB: [u32; 7] = [30, 32, 34, 40, 42, 50, 54];

pub fn fixture_path(loss_db: u32) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("fixtures/loss_{loss_db}db.json"))
}

pub fn fixture(loss_db: u32) -> MeasurementSet {
    let text = std::fs::read_to_string(fixture_path(loss_db)).unwrap();
    MeasurementFile::parse(&text).unwrap().to_measurements().unwrap()
}

/// Best objective over all vertices of a box-bounded LP, or `None` when no
/// vertex is feasible. Every vertex lies on `n` active hyperplanes drawn from
/// the constraint rows and the variable bounds.
pub fn vertex_enumeration(lp: &LinearProgram, tol: f64) -> Option<f64> {
    let n = lp.num_vars();
    let mut planes: Vec<(Vec<f64>, f64)> = lp
        .constraints
        .iter()
        .map(|c| (c.coefficients.clone(), c.rhs))
        .collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), lp.lower[j]));
        planes.push((e, lp.upper[j]));
    }
    let mut best: Option<f64> = None;
    let mut subset: Vec<usize> = (0..n).collect();
    loop {
        if let Some(x) = solve_square(&subset.iter().map(|&k| planes[k].clone()).collect::<Vec<_>>()) {
            if is_feasible(lp, &x, tol) {
                let v = lp.objective_value(&x);
                best = Some(match (best, lp.sense) {
                    (None, _) => v,
                    (Some(b), Sense::Minimize) => b.min(v),
                    (Some(b), Sense::Maximize) => b.max(v),
                });
            }
        }
        // next n-combination of planes
        let total = planes.len();
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if subset[i] != i + total - n {
                break;
            }
        }
        subset[i] += 1;
        for k in i + 1..n {
            subset[k] = subset[k - 1] + 1;
        }
    }
}

fn solve_square(rows: &[(Vec<f64>, f64)]) -> Option<Vec<f64>> {
    let n = rows.len();
    let mut a: Vec<Vec<f64>> = rows
        .iter()
        .map(|(r, b)| {
            let mut v = r.clone();
            v.push(*b);
            v
        })
        .collect();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() < 1e-10 {
            return None;
        }
        a.swap(k, p);
        for i in 0..n {
            if i != k {
                let f = a[i][k] / a[k][k];
                for c in k..=n {
                    a[i][c] -= f * a[k][c];
                }
            }
        }
    }
    Some((0..n).map(|k| a[k][n] / a[k][k]).collect())
}

fn is_feasible(lp: &LinearProgram, x: &[f64], tol: f64) -> bool {
    for (j, &v) in x.iter().enumerate() {
        if v < lp.lower[j] - tol || v > lp.upper[j] + tol {
            return false;
        }
    }
    lp.constraints.iter().all(|c| {
        let ax: f64 = c.coefficients.iter().zip(x).map(|(a, b)| a * b).sum();
        match c.relation {
            Relation::LessEq => ax <= c.rhs + tol,
            Relation::GreaterEq => ax >= c.rhs - tol,
            Relation::Equal => (ax - c.rhs).abs() <= tol,
        }
    })
}

/// Random box-bounded LP. When `feasible_by_construction`, every row is
/// satisfied by a hidden interior point.
pub fn random_lp(rng: &mut ChaCha8Rng, n: usize, m: usize, feasible_by_construction: bool) -> LinearProgram {
    let sense = if rng.random::<bool>() { Sense::Minimize } else { Sense::Maximize };
    let objective = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut lp = LinearProgram::new(sense, objective);
    lp.upper = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    let x0: Vec<f64> = lp.upper.iter().map(|u| rng.random_range(0.0..*u)).collect();
    for _ in 0..m {
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ax: f64 = a.iter().zip(&x0).map(|(a, x)| a * x).sum();
        let slack = rng.random_range(0.0..0.5);
        let (relation, rhs) = if rng.random::<bool>() {
            (Relation::LessEq, ax + slack)
        } else {
            (Relation::GreaterEq, ax - slack)
        };
        let rhs = if feasible_by_construction { rhs } else { rhs + rng.random_range(-2.0..2.0) };
        lp.add_constraint(a, relation, rhs);
    }
    lp
}

/// Monte Carlo estimate of the 16 click-pattern probabilities.
///
/// Works with field amplitudes rather than the intensity formula used by the
/// library: Bob's light is split into a part sharing Alice's spatio-temporal
/// mode (amplitude fraction `ξ`) and an orthogonal remainder, photon numbers
/// are Poisson-sampled per mode and output port, thinned binomially by the
/// detection efficiency, and dark counts are added independently.
pub fn monte_carlo_patterns(
    basis: Basis,
    bit_a: u8,
    bit_b: u8,
    mu_a: f64,
    mu_b: f64,
    model: &SystemModel,
    samples: u64,
    seed: u64,
) -> [u64; 16] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = model.arm_transmission();
    let eta = model.detection_efficiency();
    let alice = encode(basis, bit_a, mu_a, t, 0.0);
    let bob = encode(basis, bit_b, mu_b, t, model.misalignment_phase_rad);
    let xi = model.xi;
    let mut counts = [0u64; 16];
    let detect = |rng: &mut ChaCha8Rng, mean: f64| -> bool {
        if mean <= 0.0 {
            return false;
        }
        let arriving = Poisson::new(mean).unwrap().sample(rng) as u64;
        arriving > 0 && Binomial::new(arriving, eta).unwrap().sample(rng) > 0
    };
    for _ in 0..samples {
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let mut pattern = 0usize;
        for bin in 0..2 {
            let (ar, ai) = polar(alice.intensity[bin].sqrt(), alice.phase[bin] + theta);
            let (br, bi) = polar(bob.intensity[bin].sqrt(), bob.phase[bin]);
            let shared = [
                0.5 * ((ar + xi * br).powi(2) + (ai + xi * bi).powi(2)),
                0.5 * ((ar - xi * br).powi(2) + (ai - xi * bi).powi(2)),
            ];
            let orthogonal = 0.5 * (1.0 - xi * xi) * bob.intensity[bin];
            for port in 0..2 {
                let photon = detect(&mut rng, shared[port]) | detect(&mut rng, orthogonal);
                let dark = rng.random::<f64>() < model.dark_count_prob_per_gate;
                if photon || dark {
                    pattern |= 1 << (2 * bin + port);
                }
            }
        }
        counts[pattern] += 1;
    }
    counts
}

fn polar(r: f64, phase: f64) -> (f64, f64) {
    (r * phase.cos(), r * phase.sin())
}

pub fn singlet_count(counts: &[u64; 16]) -> u64 {
    SINGLET_PATTERNS.iter().map(|&p| counts[p]).sum()
}

/// Fraction of `trials` binomial draws whose Chernoff interval covers the mean.
pub fn chernoff_coverage(n: u64, q: f64, epsilon: f64, trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let binomial = Binomial::new(n, q).unwrap();
    let mean = q * n as f64;
    let covered = (0..trials)
        .filter(|_| {
            let k = binomial.sample(&mut rng) as f64;
            let b = bound_count(k, epsilon).unwrap();
            b.lower <= mean && mean <= b.upper
        })
        .count();
    covered as f64 / trials as f64
}

/// ∫₀¹ f(x) dx with x = sin²t, which removes both endpoint singularities:
/// f(sin²t)·2 sin t cos t is smooth on [0, π/2].
pub fn density_integral(panels: usize) -> f64 {
    let h = FRAC_PI_2 / panels as f64;
    let g = |t: f64| {
        let x = t.sin().powi(2);
        if x <= 0.0 || x >= 1.0 {
            2.0 / PI
        } else {
            phase_randomization_density(x).unwrap() * 2.0 * t.sin() * t.cos()
        }
    };
    // composite Simpson
    let mut sum = g(0.0) + g(FRAC_PI_2);
    for k in 1..panels {
        sum += g(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

/// χ² p-value of a histogram of `(1 + cos φ)/2` for uniform `φ` against the
/// analytic distribution.
pub fn phase_histogram_p_value(samples: usize, bins: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; bins];
    for _ in 0..samples {
        let phi: f64 = rng.random_range(0.0..2.0 * PI);
        let x = 0.5 * (1.0 + phi.cos());
        counts[((x * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let chi2: f64 = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let lo = k as f64 / bins as f64;
            let hi = (k + 1) as f64 / bins as f64;
            let expected = samples as f64 * (phase_randomization_cdf(hi) - phase_randomization_cdf(lo));
            (c as f64 - expected).powi(2) / expected
        })
        .sum();
    1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(chi2)
}

/// Random lossy model and protocol parameters with `s > u > v > w`.
pub fn random_setup(rng: &mut ChaCha8Rng) -> (ProtocolParameters, SystemModel) {
    let mut model = SystemModel::paper(rng.random_range(0.0..40.0));
    model.xi = rng.random_range(0.8..1.0);
    model.dark_count_prob_per_gate = 10f64.powf(rng.random_range(-9.0..-5.0));
    model.misalignment_phase_rad = rng.random_range(-0.3..0.3);
    let u = rng.random_range(0.1..0.6);
    let v = rng.random_range(0.01..0.08);
    let px = [rng.random_range(0.01..0.1), rng.random_range(0.01..0.1), rng.random_range(0.01..0.1)];
    let params = ProtocolParameters::new(
        [rng.random_range(u + 0.01..0.9), u, v, 2e-4],
        [1.0 - px.iter().sum::<f64>(), px[0], px[1], px[2]],
    )
    .unwrap();
    (params, model)
}

