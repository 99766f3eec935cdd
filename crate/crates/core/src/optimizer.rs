//! Multi-start Nelder-Mead search over `(s, u, v, P_Z, P_X^u, P_X^v)` for the
//! largest simulated key rate at a given loss.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoy_lp::estimate_bounds;
use crate::error::{Error, Result};
use crate::physics::{simulate_measurements, SystemModel};
use crate::protocol::{secure_key_rate, ProtocolParameters, SecurityAnalysis};

pub const DIMENSIONS: usize = 6;
pub const VACUUM_INTENSITY: f64 = 2e-4;
/// Fitness of a candidate that violates the ordering or probability constraints,
/// before the graded violation term is subtracted.
pub const INFEASIBLE_PENALTY: f64 = -1e6;

pub type Candidate = [f64; DIMENSIONS];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizationProblem {
    pub model: SystemModel,
    pub n_total: f64,
    pub analysis: SecurityAnalysis,
    pub w: f64,
}

impl OptimizationProblem {
    pub fn new(model: SystemModel, n_total: f64, analysis: SecurityAnalysis) -> Self {
        Self {
            model,
            n_total,
            analysis,
            w: VACUUM_INTENSITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.analysis.validate()?;
        if !(self.n_total >= 1.0 && self.n_total.is_finite()) {
            return Err(Error::InvalidInput(format!("n_total = {} must be >= 1", self.n_total)));
        }
        if !(self.w >= 0.0 && self.w < 1.0) {
            return Err(Error::InvalidInput(format!("w = {} must be in [0, 1)", self.w)));
        }
        Ok(())
    }
}

/// Total amount by which `x` violates `1 > s > u > v > w` and the probability
/// constraints; zero for a feasible candidate.
pub fn constraint_violation(x: &Candidate, w: f64) -> f64 {
    let [s, u, v, pz, pu, pv] = *x;
    let pw = 1.0 - pz - pu - pv;
    let gap = |lo: f64, hi: f64| (lo - hi).max(0.0);
    let open_unit = |p: f64| gap(0.0, p) + gap(p, 1.0) + if p == 0.0 || p == 1.0 { 1e-12 } else { 0.0 };
    let strict = |hi: f64, lo: f64| if hi > lo { 0.0 } else { lo - hi + 1e-12 };
    strict(1.0, s)
        + strict(s, u)
        + strict(u, v)
        + strict(v, w)
        + open_unit(pz)
        + open_unit(pu)
        + open_unit(pv)
        + open_unit(pw)
}

pub fn candidate_parameters(x: &Candidate, w: f64) -> Result<ProtocolParameters> {
    let [s, u, v, pz, pu, pv] = *x;
    ProtocolParameters::new([s, u, v, w], [pz, pu, pv, 1.0 - pz - pu - pv])
}

pub fn parameters_to_candidate(p: &ProtocolParameters) -> Candidate {
    [p.s, p.u, p.v, p.p_z_s, p.p_x_u, p.p_x_v]
}

/// Unclamped key rate in bits per second, or a penalty below
/// [`INFEASIBLE_PENALTY`] that grows with the constraint violation.
///
/// The rate is left unclamped so that the search still has a gradient to
/// follow where the key rate is negative.
pub fn fitness(x: &Candidate, problem: &OptimizationProblem) -> f64 {
    let violation = constraint_violation(x, problem.w);
    if violation > 0.0 {
        return INFEASIBLE_PENALTY * (1.0 + violation);
    }
    match evaluate(x, problem) {
        Ok(rate) => rate,
        Err(_) => INFEASIBLE_PENALTY,
    }
}

fn evaluate(x: &Candidate, problem: &OptimizationProblem) -> Result<f64> {
    let params = candidate_parameters(x, problem.w)?;
    let m = simulate_measurements(&params, &problem.model, problem.n_total)?;
    let bounds = estimate_bounds(&m, &problem.analysis)?;
    let report = secure_key_rate(&m, &bounds, &problem.analysis)?;
    Ok(report.raw_rate_per_clock * m.clock_hz)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub starts: usize,
    pub seed: u64,
    pub max_evaluations: usize,
    /// Convergence once every coordinate of the simplex spans less than this.
    pub tolerance: f64,
    /// Extra starting point searched before the Latin-hypercube starts.
    pub initial_guess: Option<Candidate>,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            starts: 8,
            seed: 0x5eed,
            max_evaluations: 2000,
            tolerance: 1e-4,
            initial_guess: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalResult {
    pub start: Candidate,
    pub best: Candidate,
    pub fitness: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best: Candidate,
    pub params: ProtocolParameters,
    /// Best fitness, clamped at zero.
    pub rate_bps: f64,
    pub raw_fitness: f64,
    pub no_key: bool,
    pub runs: Vec<LocalResult>,
}

/// Latin-hypercube points in the unit cube.
pub fn latin_hypercube(count: usize, seed: u64) -> Vec<Candidate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = vec![[0.0; DIMENSIONS]; count];
    for d in 0..DIMENSIONS {
        let mut strata: Vec<usize> = (0..count).collect();
        // Fisher-Yates
        for i in (1..count).rev() {
            let j = rng.random_range(0..=i);
            strata.swap(i, j);
        }
        for (p, &k) in points.iter_mut().zip(&strata) {
            p[d] = (k as f64 + rng.random::<f64>()) / count as f64;
        }
    }
    points
}

/// Maps a unit-cube point to a feasible candidate: intensities nested as
/// fractions of the next larger one, probabilities as fractions of what the
/// signal leaves over.
pub fn unit_to_candidate(r: &Candidate, w: f64) -> Candidate {
    let s = 0.2 + 0.7 * r[0];
    let u = s * (0.15 + 0.7 * r[1]);
    let v = w + (u - w) * (0.05 + 0.5 * r[2]);
    let pz = 0.5 + 0.45 * r[3];
    let rest = 1.0 - pz;
    let pu = rest * (0.02 + 0.3 * r[4]);
    let pv = rest * (0.1 + 0.5 * r[5]);
    [s, u, v, pz, pu, pv]
}

pub fn nelder_mead<F: Fn(&Candidate) -> f64>(
    f: F,
    start: &Candidate,
    max_evaluations: usize,
    tolerance: f64,
) -> LocalResult {
    const REFLECT: f64 = 1.0;
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;

    // minimise the negated fitness
    let evaluations = std::cell::Cell::new(0usize);
    let cost = |x: &Candidate| {
        evaluations.set(evaluations.get() + 1);
        -f(x)
    };
    let mut simplex: Vec<(Candidate, f64)> = Vec::with_capacity(DIMENSIONS + 1);
    simplex.push((*start, cost(start)));
    for d in 0..DIMENSIONS {
        let mut x = *start;
        let step = (0.2 * x[d].abs()).max(1e-3);
        x[d] += if x[d] + step < 1.0 { step } else { -step };
        let c = cost(&x);
        simplex.push((x, c));
    }

    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = (0..DIMENSIONS).all(|d| {
            let (lo, hi) = simplex
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (x, _)| (lo.min(x[d]), hi.max(x[d])));
            hi - lo < tolerance
        });
        if spread {
            converged = true;
            break;
        }
        if evaluations.get() >= max_evaluations {
            break;
        }

        let worst = simplex[DIMENSIONS];
        let mut centroid = [0.0; DIMENSIONS];
        for (x, _) in &simplex[..DIMENSIONS] {
            for d in 0..DIMENSIONS {
                centroid[d] += x[d] / DIMENSIONS as f64;
            }
        }
        let along = |t: f64| -> Candidate { std::array::from_fn(|d| centroid[d] + t * (worst.0[d] - centroid[d])) };

        let reflected = along(-REFLECT);
        let fr = cost(&reflected);
        if fr < simplex[0].1 {
            let expanded = along(-EXPAND);
            let fe = cost(&expanded);
            simplex[DIMENSIONS] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < simplex[DIMENSIONS - 1].1 {
            simplex[DIMENSIONS] = (reflected, fr);
            continue;
        }
        let (contracted, fc) = if fr < worst.1 {
            let x = along(-CONTRACT);
            let c = cost(&x);
            (x, c)
        } else {
            let x = along(CONTRACT);
            let c = cost(&x);
            (x, c)
        };
        if fc < worst.1.min(fr) {
            simplex[DIMENSIONS] = (contracted, fc);
            continue;
        }
        let best = simplex[0].0;
        for vertex in simplex.iter_mut().skip(1) {
            let x: Candidate = std::array::from_fn(|d| best[d] + SHRINK * (vertex.0[d] - best[d]));
            *vertex = (x, cost(&x));
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    LocalResult {
        start: *start,
        best: simplex[0].0,
        fitness: -simplex[0].1,
        evaluations: evaluations.get(),
        converged,
    }
}

pub fn starting_points(problem: &OptimizationProblem, settings: &OptimizerSettings) -> Vec<Candidate> {
    let mut starts: Vec<Candidate> = settings.initial_guess.into_iter().collect();
    starts.extend(
        latin_hypercube(settings.starts, settings.seed)
            .iter()
            .map(|r| unit_to_candidate(r, problem.w)),
    );
    starts
}

pub fn optimize(problem: &OptimizationProblem, settings: &OptimizerSettings) -> Result<OptimizationResult> {
    problem.validate()?;
    let starts = starting_points(problem, settings);
    if starts.is_empty() {
        return Err(Error::InvalidInput("optimizer needs at least one start".into()));
    }
    let runs: Vec<LocalResult> = starts
        .par_iter()
        .map(|x0| nelder_mead(|x| fitness(x, problem), x0, settings.max_evaluations, settings.tolerance))
        .collect();
    let mut best = 0;
    for (k, r) in runs.iter().enumerate() {
        if r.fitness > runs[best].fitness {
            best = k;
        }
    }
    let winner = runs[best];
    let params = candidate_parameters(&winner.best, problem.w)?;
    let no_key = !(winner.fitness > 0.0);
    Ok(OptimizationResult {
        best: winner.best,
        params,
        rate_bps: if no_key { 0.0 } else { winner.fitness },
        raw_fitness: winner.fitness,
        no_key,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn violations() {
        let paper = [0.55, 0.24, 0.047, 0.85, 0.01, 0.093];
        assert_eq!(constraint_violation(&paper, VACUUM_INTENSITY), 0.0);
        let sum_over = [0.55, 0.24, 0.047, 0.85, 0.1, 0.093];
        assert!(constraint_violation(&sum_over, VACUUM_INTENSITY) > 0.0);
        let degenerate = [0.24, 0.24, 0.047, 0.85, 0.01, 0.093];
        assert!(constraint_violation(&degenerate, VACUUM_INTENSITY) > 0.0);
    }

    #[test]
    fn penalty_grows_with_violation() {
        let p = OptimizationProblem::new(SystemModel::calibrated(30.0), 8.64e13, SecurityAnalysis::finite_composable());
        let a = fitness(&[0.55, 0.24, 0.047, 0.85, 0.1, 0.093], &p);
        let b = fitness(&[0.55, 0.24, 0.047, 0.85, 0.3, 0.093], &p);
        assert!(a <= INFEASIBLE_PENALTY && b < a);
    }

    #[test]
    fn latin_hypercube_stratifies_each_axis() {
        let pts = latin_hypercube(8, 7);
        for d in 0..DIMENSIONS {
            let mut bins: Vec<usize> = pts.iter().map(|p| (p[d] * 8.0) as usize).collect();
            bins.sort();
            assert_eq!(bins, (0..8).collect::<Vec<_>>());
        }
        assert_eq!(pts, latin_hypercube(8, 7));
    }

    #[test]
    fn mapped_starts_are_feasible() {
        for r in latin_hypercube(64, 3) {
            let x = unit_to_candidate(&r, VACUUM_INTENSITY);
            assert_eq!(constraint_violation(&x, VACUUM_INTENSITY), 0.0, "{x:?}");
        }
    }

    #[test]
    fn nelder_mead_finds_quadratic_peak() {
        let target = [0.5, 0.3, 0.1, 0.7, 0.05, 0.1];
        let f = |x: &Candidate| -x.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let r = nelder_mead(f, &[0.4, 0.2, 0.2, 0.6, 0.1, 0.2], 20_000, 1e-7);
        assert!(r.converged);
        for (a, b) in r.best.iter().zip(&target) {
            assert!((a - b).abs() < 1e-5);
        }
    }
}
