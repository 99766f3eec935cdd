//! Decoy-state linear programs bounding the single-photon yield and bit-error
//! yield from the nine X-basis flux pairs.
//!
//! Variables are `y^{m,n}` (or `b^{m,n}`) for `0 ≤ m, n ≤ S_cut`, stored at
//! index `m·(S_cut+1) + n`, each boxed to `[0, 1]`. Every flux pair
//! contributes a lower (`≥`) and an upper (`≤`) row, in the order
//! `(u,u), (u,v), (u,w), (v,u), …, (w,w)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::finite_size::{bound_count, bound_count_interval, gaussian_fluctuation, PairCounts, RateBounds};
use crate::protocol::{poisson_weight, AnalysisVariant, MeasurementSet, SecurityAnalysis, YieldBounds};
use crate::simplex::{self, LinearProgram, LpSolution, LpStatus, Relation, Sense};

/// Index of `y^{m,n}` in the variable vector.
pub fn variable_index(m: usize, n: usize, s_cut: usize) -> usize {
    m * (s_cut + 1) + n
}

/// Probability mass that the photon-number truncation at `s_cut` discards
/// from a pair of Poisson sources with means `mu_i` and `mu_j`.
pub fn gamma_ij(mu_i: f64, mu_j: f64, s_cut: usize) -> f64 {
    let (head_i, tail_i) = poisson_head_tail(mu_i, s_cut);
    let (head_j, tail_j) = poisson_head_tail(mu_j, s_cut);
    head_i * tail_j + tail_i * head_j + tail_i * tail_j
}

/// `(P[n ≤ s_cut], P[n > s_cut])`, the tail summed directly so it keeps full
/// relative precision when it is far below machine epsilon.
fn poisson_head_tail(mu: f64, s_cut: usize) -> (f64, f64) {
    let head: f64 = (0..=s_cut as u32).map(|n| poisson_weight(mu, n)).sum();
    if head < 0.5 {
        return (head, 1.0 - head);
    }
    let mut tail = 0.0;
    let mut n = s_cut as u32 + 1;
    loop {
        let term = poisson_weight(mu, n);
        tail += term;
        if term <= tail * 1e-18 || term == 0.0 {
            break;
        }
        n += 1;
    }
    (head, tail)
}

/// Constraint coefficients `e^{-(μi+μj)} μi^m μj^n / (m! n!)` of one flux pair.
pub fn row_coefficients(mu_i: f64, mu_j: f64, s_cut: usize) -> Vec<f64> {
    let pi: Vec<f64> = (0..=s_cut as u32).map(|m| poisson_weight(mu_i, m)).collect();
    let pj: Vec<f64> = (0..=s_cut as u32).map(|n| poisson_weight(mu_j, n)).collect();
    let mut row = Vec::with_capacity(pi.len() * pj.len());
    for a in &pi {
        for b in &pj {
            row.push(a * b);
        }
    }
    row
}

/// Measured quantities of one X-basis flux pair. Gains and bit-error rates
/// are intervals so that values known only to a printed precision can be
/// carried through; exact measurements have equal endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxPair {
    pub mu_a: f64,
    pub mu_b: f64,
    pub gain_lower: f64,
    pub gain_upper: f64,
    /// Bounds on `B = Q·E`.
    pub ber_lower: f64,
    pub ber_upper: f64,
    pub samples: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxPairConstraintData {
    pub s_cut: usize,
    pub pairs: [[FluxPair; 3]; 3],
}

impl FluxPairConstraintData {
    pub fn from_measurements(m: &MeasurementSet, s_cut: usize) -> Result<Self> {
        m.validate()?;
        let mu = m.params.x_intensities();
        let pairs = std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let (gain_lower, gain_upper) = m.x_gain_interval(i, j);
                let (ber_lower, ber_upper) = m.x_ber_interval(i, j);
                FluxPair {
                    mu_a: mu[i],
                    mu_b: mu[j],
                    gain_lower,
                    gain_upper,
                    ber_lower,
                    ber_upper,
                    samples: m.n_x(i, j),
                    gamma: gamma_ij(mu[i], mu[j], s_cut),
                }
            })
        });
        let data = Self { s_cut, pairs };
        data.validate()?;
        Ok(data)
    }

    pub fn validate(&self) -> Result<()> {
        for (k, p) in self.pairs.iter().flatten().enumerate() {
            let ok = p.gain_lower >= 0.0
                && p.gain_lower <= p.gain_upper
                && p.ber_lower >= 0.0
                && p.ber_lower <= p.ber_upper
                && p.ber_lower <= p.gain_upper
                && p.gamma >= 0.0
                && p.samples > 0.0
                && p.mu_a >= 0.0
                && p.mu_b >= 0.0;
            if !ok {
                return Err(Error::InvalidInput(format!("flux pair {k} is inconsistent: {p:?}")));
            }
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = &FluxPair> {
        self.pairs.iter().flatten()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpKind {
    Yield,
    Error,
}

/// Right-hand sides of one flux pair's two rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRow {
    pub mu_a: f64,
    pub mu_b: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[error("{kind:?} linear program is infeasible under the {variant:?} analysis")]
pub struct InfeasibleLp {
    pub kind: LpKind,
    pub variant: AnalysisVariant,
    pub rows: Vec<ConstraintRow>,
}

/// Fluctuation-adjusted interval for one rate, before subtracting `γ`.
fn adjusted_interval(lo: f64, hi: f64, samples: f64, analysis: &SecurityAnalysis) -> Result<(f64, f64)> {
    match analysis.variant {
        AnalysisVariant::Asymptotic => Ok((lo, hi)),
        AnalysisVariant::FiniteGaussian => {
            // F(ζ) diverges as ζ → 0 but Q·F(N·Q) → 0, so empty cells keep their asymptotic row.
            let shift = |q: f64| -> Result<f64> {
                if q * samples > 0.0 {
                    Ok(q * gaussian_fluctuation(samples * q, analysis.n_sigma)?)
                } else {
                    Ok(0.0)
                }
            };
            Ok((lo - shift(lo)?, hi + shift(hi)?))
        }
        AnalysisVariant::FiniteComposable => {
            let sent = bound_count(samples, analysis.epsilon_0)?;
            let detected = bound_count_interval(lo * samples, hi * samples, analysis.epsilon_0)?;
            let r = RateBounds::from_counts(&PairCounts {
                sent,
                detected,
                errors: detected,
            });
            Ok((r.q_lower, r.q_upper))
        }
    }
}

/// Lower and upper right-hand sides for every flux pair.
pub fn constraint_rows(
    data: &FluxPairConstraintData,
    analysis: &SecurityAnalysis,
    kind: LpKind,
) -> Result<Vec<ConstraintRow>> {
    data.validate()?;
    data.iter()
        .map(|p| {
            let (lo, hi) = match kind {
                LpKind::Yield => (p.gain_lower, p.gain_upper),
                LpKind::Error => (p.ber_lower, p.ber_upper),
            };
            let (lo, hi) = adjusted_interval(lo, hi, p.samples, analysis)?;
            Ok(ConstraintRow {
                mu_a: p.mu_a,
                mu_b: p.mu_b,
                lower: (lo - p.gamma).max(0.0),
                upper: hi.min(1.0),
            })
        })
        .collect()
}

fn build_lp(
    data: &FluxPairConstraintData,
    analysis: &SecurityAnalysis,
    kind: LpKind,
) -> Result<(LinearProgram, Vec<ConstraintRow>)> {
    analysis.validate()?;
    if data.s_cut != analysis.s_cut {
        return Err(Error::InvalidInput(format!(
            "constraint data truncated at {} but analysis uses s_cut = {}",
            data.s_cut, analysis.s_cut
        )));
    }
    let s_cut = data.s_cut;
    let n_vars = (s_cut + 1) * (s_cut + 1);
    let rows = constraint_rows(data, analysis, kind)?;
    // Objective in units of the largest row bound, so the solver's absolute
    // reduced-cost tolerance sits well below the size of y11 itself.
    let scale = rows.iter().map(|r| r.upper).fold(0.0, f64::max);
    let mut objective = vec![0.0; n_vars];
    objective[variable_index(1, 1, s_cut)] = if scale > 0.0 { 1.0 / scale } else { 1.0 };
    let sense = match kind {
        LpKind::Yield => Sense::Minimize,
        LpKind::Error => Sense::Maximize,
    };
    let mut lp = LinearProgram::new(sense, objective).with_uniform_bounds(0.0, 1.0);
    for row in &rows {
        let coefficients = row_coefficients(row.mu_a, row.mu_b, s_cut);
        lp.add_constraint(coefficients.clone(), Relation::GreaterEq, row.lower);
        lp.add_constraint(coefficients, Relation::LessEq, row.upper);
    }
    Ok((lp, rows))
}

/// Program minimising `y^{1,1}` (objective scaled by the largest row bound) subject to the gain rows.
pub fn build_yield_lp(data: &FluxPairConstraintData, analysis: &SecurityAnalysis) -> Result<LinearProgram> {
    build_lp(data, analysis, LpKind::Yield).map(|(lp, _)| lp)
}

/// Program maximising `b^{1,1}` subject to the bit-error-rate rows.
pub fn build_error_lp(data: &FluxPairConstraintData, analysis: &SecurityAnalysis) -> Result<LinearProgram> {
    build_lp(data, analysis, LpKind::Error).map(|(lp, _)| lp)
}

/// Bounds together with the solved programs they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoyEstimate {
    pub bounds: YieldBounds,
    pub yield_solution: LpSolution,
    pub error_solution: LpSolution,
}

fn solve_kind(data: &FluxPairConstraintData, analysis: &SecurityAnalysis, kind: LpKind) -> Result<LpSolution> {
    let (lp, rows) = build_lp(data, analysis, kind)?;
    let sol = simplex::solve(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol),
        LpStatus::Infeasible => Err(Box::new(InfeasibleLp {
            kind,
            variant: analysis.variant,
            rows,
        })
        .into()),
        LpStatus::Unbounded => Err(simplex::LpError::Malformed(
            "decoy program reported unbounded despite box bounds".into(),
        )
        .into()),
    }
}

pub fn estimate_from_data(data: &FluxPairConstraintData, analysis: &SecurityAnalysis) -> Result<DecoyEstimate> {
    let yield_solution = solve_kind(data, analysis, LpKind::Yield)?;
    let error_solution = solve_kind(data, analysis, LpKind::Error)?;
    let idx = variable_index(1, 1, data.s_cut);
    let y = yield_solution.x[idx].clamp(0.0, 1.0);
    let b = error_solution.x[idx].clamp(0.0, 1.0);
    let e = if y > 0.0 { (b / y).min(1.0) } else { 1.0 };
    let y_z = match analysis.variant {
        AnalysisVariant::Asymptotic => y,
        _ => (y - analysis.theta_yield).max(0.0),
    };
    Ok(DecoyEstimate {
        bounds: YieldBounds {
            y_x_11_lower: y,
            e_x_11_upper: e,
            y_z_11_lower: y_z,
            b_x_11_upper: b,
        },
        yield_solution,
        error_solution,
    })
}

pub fn estimate_bounds_detailed(m: &MeasurementSet, analysis: &SecurityAnalysis) -> Result<DecoyEstimate> {
    analysis.validate()?;
    let data = FluxPairConstraintData::from_measurements(m, analysis.s_cut)?;
    estimate_from_data(&data, analysis)
}

pub fn estimate_bounds(m: &MeasurementSet, analysis: &SecurityAnalysis) -> Result<YieldBounds> {
    estimate_bounds_detailed(m, analysis).map(|e| e.bounds)
}
