//! Dense bounded-variable revised simplex method.
//!
//! Variables carry their own box bounds and are never split into slack rows.
//! Every constraint gets one logical (slack) column; rows that the initial
//! point violates get an artificial column, and phase 1 drives those to zero.
//! The basis inverse is kept explicitly and updated with product-form pivots,
//! with a fresh factorisation every [`REFACTOR_INTERVAL`] pivots and before
//! optimality is declared.
//!
//! Rows are equilibrated internally by their largest coefficient. Feasibility
//! is still judged relative to each right-hand side (see
//! [`LinearProgram::max_violation`]), which keeps rows whose right-hand side
//! is `1e-12` meaningful without scaling them up and wrecking the conditioning
//! of the basis.
//!
//! Reduced costs of columns with large entries cannot be resolved to `1e-9`,
//! so pricing uses the larger of the optimality tolerance and a
//! rounding-error estimate for each column. Degenerate runs switch to Bland's
//! rule, and if a basis still repeats the reduced costs that led back to it
//! were noise, so the pricing tolerance of that phase is raised tenfold.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::hash::{DefaultHasher, Hash, Hasher};
use thiserror::Error;

const REFACTOR_INTERVAL: usize = 32;
const DEGENERATE_PIVOTS_BEFORE_BLAND: usize = 50;
const PIVOT_TOLERANCE: f64 = 1e-11;
/// Multiple of `ε·Σ|π_i a_ij|` below which a reduced cost is treated as zero.
const REDUCED_COST_NOISE: f64 = 1e3;
/// Cap on the tolerance escalation triggered by a repeated basis.
const MAX_NOISE_ESCALATION: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    LessEq,
    GreaterEq,
    Equal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub coefficients: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    /// A program over `objective.len()` variables, each bounded to `[0, ∞)`.
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            sense,
            objective,
            constraints: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn with_uniform_bounds(mut self, lower: f64, upper: f64) -> Self {
        self.lower.iter_mut().for_each(|l| *l = lower);
        self.upper.iter_mut().for_each(|u| *u = upper);
        self
    }

    pub fn add_constraint(&mut self, coefficients: Vec<f64>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint {
            coefficients,
            relation,
            rhs,
        });
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Malformed(format!(
                "{n} variables but {} lower and {} upper bounds",
                self.lower.len(),
                self.upper.len()
            )));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::Malformed("non-finite objective coefficient".into()));
        }
        for (j, (&l, &u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(LpError::Malformed(format!("bad bounds [{l}, {u}] on variable {j}")));
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coefficients.len() != n {
                return Err(LpError::Malformed(format!(
                    "constraint {i} has {} coefficients, expected {n}",
                    c.coefficients.len()
                )));
            }
            if !c.rhs.is_finite() || c.coefficients.iter().any(|a| !a.is_finite()) {
                return Err(LpError::Malformed(format!("constraint {i} is not finite")));
            }
        }
        Ok(())
    }

    /// Largest scaled violation of any constraint or bound at `x`, measured
    /// the same way the solver measures feasibility.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.constraints {
            let ax: f64 = c.coefficients.iter().zip(x).map(|(a, x)| a * x).sum();
            let scale = row_scale(&c.coefficients, c.rhs);
            let v = match c.relation {
                Relation::LessEq => ax - c.rhs,
                Relation::GreaterEq => c.rhs - ax,
                Relation::Equal => (ax - c.rhs).abs(),
            };
            worst = worst.max(v * scale);
        }
        for ((&xj, &l), &u) in x.iter().zip(&self.lower).zip(&self.upper) {
            worst = worst.max(l - xj).max(xj - u);
        }
        worst
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, x)| c * x).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective in the program's own sense; `NaN` unless optimal.
    pub objective: f64,
    pub x: Vec<f64>,
    /// Row multipliers of the minimisation form (objective negated when
    /// maximising), in the units of the unscaled rows.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    fn sign(lp: &LinearProgram) -> f64 {
        match lp.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        }
    }

    /// Reduced costs `c_j − πᵀA_j` of the minimisation form.
    pub fn reduced_costs(&self, lp: &LinearProgram) -> Vec<f64> {
        let sign = Self::sign(lp);
        (0..lp.num_vars())
            .map(|j| {
                sign * lp.objective[j]
                    - lp
                        .constraints
                        .iter()
                        .zip(&self.duals)
                        .map(|(c, p)| p * c.coefficients[j])
                        .sum::<f64>()
            })
            .collect()
    }

    /// Post-hoc optimality certificate: primal feasibility, dual sign
    /// conditions and complementary slackness, all within `tol`.
    pub fn certify_optimality(&self, lp: &LinearProgram, tol: f64) -> bool {
        if self.status != LpStatus::Optimal {
            return false;
        }
        if lp.max_violation(&self.x) > tol {
            return false;
        }
        let d = self.reduced_costs(lp);
        for j in 0..lp.num_vars() {
            let mag: f64 = 1.0
                + lp.objective[j].abs()
                + lp
                    .constraints
                    .iter()
                    .zip(&self.duals)
                    .map(|(c, p)| (p * c.coefficients[j]).abs())
                    .sum::<f64>();
            let t = tol * mag;
            let width = lp.upper[j] - lp.lower[j];
            let at_lower = (self.x[j] - lp.lower[j]).abs() <= tol * width.min(1.0).max(tol);
            let at_upper = (lp.upper[j] - self.x[j]).abs() <= tol * width.min(1.0).max(tol);
            let ok = match (at_lower, at_upper) {
                (true, true) => true,
                (true, false) => d[j] >= -t,
                (false, true) => d[j] <= t,
                (false, false) => d[j].abs() <= t,
            };
            if !ok {
                return false;
            }
        }
        for (c, &p) in lp.constraints.iter().zip(&self.duals) {
            let scale = row_scale(&c.coefficients, c.rhs);
            let ps = p / scale;
            let ax: f64 = c.coefficients.iter().zip(&self.x).map(|(a, x)| a * x).sum();
            let slack = (c.rhs - ax) * scale;
            let ok = match c.relation {
                Relation::LessEq => ps <= tol && (slack <= tol || ps.abs() <= tol),
                Relation::GreaterEq => ps >= -tol && (slack >= -tol || ps.abs() <= tol),
                Relation::Equal => true,
            };
            if !ok {
                return false;
            }
        }
        true
    }

    /// Objective of the dual built from `duals`, in the program's own sense.
    pub fn dual_objective(&self, lp: &LinearProgram) -> f64 {
        let d = self.reduced_costs(lp);
        let mut value: f64 = lp.constraints.iter().zip(&self.duals).map(|(c, p)| p * c.rhs).sum();
        for j in 0..lp.num_vars() {
            value += if d[j] > 0.0 {
                d[j] * lp.lower[j]
            } else if d[j] < 0.0 {
                d[j] * lp.upper[j]
            } else {
                0.0
            };
        }
        Self::sign(lp) * value
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_pivots: usize,
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_pivots: 1_000_000,
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("malformed linear program: {0}")]
    Malformed(String),
    #[error("iteration limit of {0} pivots reached")]
    IterationLimit(usize),
    #[error("simplex cycled even with the pricing tolerance raised")]
    Cycling,
    #[error("basis matrix became singular")]
    SingularBasis,
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_with(lp, &SolverOptions::default())
}

pub fn solve_with(lp: &LinearProgram, options: &SolverOptions) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let mut tableau = Working::new(lp, options);
    tableau.run()
}

/// Factor that turns a row's violation into the scale-free measure used for
/// feasibility decisions.
fn row_scale(coefficients: &[f64], rhs: f64) -> f64 {
    if rhs != 0.0 {
        return 1.0 / rhs.abs();
    }
    equilibration(coefficients)
}

fn equilibration(coefficients: &[f64]) -> f64 {
    let m = coefficients.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    if m > 0.0 {
        1.0 / m
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Free non-basic variable resting at zero.
    FreeZero,
}

struct Working<'a> {
    lp: &'a LinearProgram,
    opts: SolverOptions,
    m: usize,
    n_struct: usize,
    n_total: usize,
    /// Column-major `m × n_total` matrix of scaled rows.
    cols: Vec<f64>,
    b: Vec<f64>,
    row_scale: Vec<f64>,
    /// Converts an artificial's value into the violation measure of its row.
    violation_weight: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    binv: Vec<f64>,
    iterations: usize,
    since_refactor: usize,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

impl<'a> Working<'a> {
    fn new(lp: &'a LinearProgram, opts: &SolverOptions) -> Self {
        let m = lp.constraints.len();
        let n_struct = lp.num_vars();
        // structural | slack (one per row) | artificial (one per row)
        let n_total = n_struct + 2 * m;
        let mut cols = vec![0.0; m * n_total];
        let mut b = vec![0.0; m];
        let mut row_scales = vec![1.0; m];
        let mut violation_weight = vec![1.0; m];
        let mut lower = Vec::with_capacity(n_total);
        let mut upper = Vec::with_capacity(n_total);
        lower.extend_from_slice(&lp.lower);
        upper.extend_from_slice(&lp.upper);
        for (i, c) in lp.constraints.iter().enumerate() {
            let r = equilibration(&c.coefficients);
            row_scales[i] = r;
            violation_weight[i] = row_scale(&c.coefficients, c.rhs) / r;
            for (j, a) in c.coefficients.iter().enumerate() {
                cols[j * m + i] = a * r;
            }
            b[i] = c.rhs * r;
        }
        for (i, c) in lp.constraints.iter().enumerate() {
            let (sign, ub) = match c.relation {
                Relation::LessEq => (1.0, f64::INFINITY),
                Relation::GreaterEq => (-1.0, f64::INFINITY),
                Relation::Equal => (1.0, 0.0),
            };
            cols[(n_struct + i) * m + i] = sign;
            lower.push(0.0);
            upper.push(ub);
        }
        for _ in 0..m {
            lower.push(0.0);
            upper.push(0.0);
        }

        let mut x = vec![0.0; n_total];
        let mut state = vec![VarState::AtLower; n_total];
        for j in 0..n_struct {
            let (l, u) = (lower[j], upper[j]);
            if l.is_finite() {
                x[j] = l;
                state[j] = VarState::AtLower;
            } else if u.is_finite() {
                x[j] = u;
                state[j] = VarState::AtUpper;
            } else {
                x[j] = 0.0;
                state[j] = VarState::FreeZero;
            }
        }

        Self {
            lp,
            opts: *opts,
            m,
            n_struct,
            n_total,
            cols,
            b,
            row_scale: row_scales,
            violation_weight,
            lower,
            upper,
            x,
            state,
            basis: vec![usize::MAX; m],
            binv: vec![0.0; m * m],
            iterations: 0,
            since_refactor: 0,
        }
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.cols[j * self.m..(j + 1) * self.m]
    }

    fn run(&mut self) -> Result<LpSolution, LpError> {
        let m = self.m;
        let n_art0 = self.n_struct + m;

        // Crash basis: a slack where it is feasible, an artificial otherwise.
        let mut residual = self.b.clone();
        for j in 0..self.n_struct {
            let xj = self.x[j];
            if xj != 0.0 {
                for (r, a) in residual.iter_mut().zip(self.col(j)) {
                    *r -= a * xj;
                }
            }
        }
        let mut needs_phase_one = false;
        for i in 0..m {
            let slack = self.n_struct + i;
            let sign = self.cols[slack * m + i];
            let value = residual[i] * sign;
            if value >= 0.0 && value <= self.upper[slack] {
                self.make_basic(slack, i, value);
            } else {
                let art = n_art0 + i;
                let s = if residual[i] >= 0.0 { 1.0 } else { -1.0 };
                self.cols[art * m + i] = s;
                self.upper[art] = f64::INFINITY;
                self.make_basic(art, i, residual[i].abs());
                needs_phase_one = true;
            }
        }
        self.refactor()?;

        if needs_phase_one {
            let mut cost = vec![0.0; self.n_total];
            for c in cost.iter_mut().skip(n_art0) {
                *c = 1.0;
            }
            self.optimize(&cost)?;
            let infeasibility = (0..m).fold(0.0f64, |w, i| w.max(self.x[n_art0 + i] * self.violation_weight[i]));
            if infeasibility > self.opts.feasibility_tol {
                return Ok(self.finish(LpStatus::Infeasible, &cost));
            }
            for j in n_art0..self.n_total {
                self.upper[j] = 0.0;
                if !matches!(self.state[j], VarState::Basic(_)) {
                    self.x[j] = 0.0;
                    self.state[j] = VarState::AtLower;
                }
            }
        }

        let sign = match self.lp.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut cost = vec![0.0; self.n_total];
        for (c, o) in cost.iter_mut().zip(&self.lp.objective) {
            *c = sign * o;
        }
        match self.optimize(&cost)? {
            PhaseOutcome::Optimal => Ok(self.finish(LpStatus::Optimal, &cost)),
            PhaseOutcome::Unbounded => Ok(self.finish(LpStatus::Unbounded, &cost)),
        }
    }

    fn make_basic(&mut self, j: usize, row: usize, value: f64) {
        self.basis[row] = j;
        self.state[j] = VarState::Basic(row);
        self.x[j] = value;
    }

    /// Gauss-Jordan inversion of the basis with partial pivoting, then
    /// recomputation of the basic values from the non-basic ones.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        for (k, &j) in self.basis.iter().enumerate() {
            for i in 0..m {
                a[i * m + k] = self.cols[j * m + i];
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for k in 0..m {
            let p = (k..m)
                .max_by(|&r, &s| a[r * m + k].abs().total_cmp(&a[s * m + k].abs()))
                .unwrap();
            let piv = a[p * m + k];
            if piv.abs() < 1e-300 {
                return Err(LpError::SingularBasis);
            }
            if p != k {
                for c in 0..m {
                    a.swap(p * m + c, k * m + c);
                    inv.swap(p * m + c, k * m + c);
                }
            }
            let inv_piv = 1.0 / piv;
            for c in 0..m {
                a[k * m + c] *= inv_piv;
                inv[k * m + c] *= inv_piv;
            }
            for r in 0..m {
                if r != k {
                    let f = a[r * m + k];
                    if f != 0.0 {
                        for c in 0..m {
                            a[r * m + c] -= f * a[k * m + c];
                            inv[r * m + c] -= f * inv[k * m + c];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        self.since_refactor = 0;
        self.recompute_basic_values();
        Ok(())
    }

    fn recompute_basic_values(&mut self) {
        let m = self.m;
        let mut rhs = self.b.clone();
        for j in 0..self.n_total {
            if !matches!(self.state[j], VarState::Basic(_)) && self.x[j] != 0.0 {
                let xj = self.x[j];
                for (r, a) in rhs.iter_mut().zip(&self.cols[j * m..(j + 1) * m]) {
                    *r -= a * xj;
                }
            }
        }
        for r in 0..m {
            let v: f64 = (0..m).map(|c| self.binv[r * m + c] * rhs[c]).sum();
            self.x[self.basis[r]] = v;
        }
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut pi = vec![0.0; m];
        for (r, &j) in self.basis.iter().enumerate() {
            let cb = cost[j];
            if cb != 0.0 {
                for c in 0..m {
                    pi[c] += cb * self.binv[r * m + c];
                }
            }
        }
        pi
    }

    /// Chooses an entering variable and its direction of motion.
    /// Returns the entering index, its direction and its reduced cost.
    fn price(&self, cost: &[f64], pi: &[f64], bland: bool, escalation: f64) -> Option<(usize, f64, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.n_total {
            let st = self.state[j];
            if matches!(st, VarState::Basic(_)) || self.lower[j] == self.upper[j] {
                continue;
            }
            let (dot, magnitude) = self
                .col(j)
                .iter()
                .zip(pi)
                .fold((0.0, 0.0), |(s, m), (a, p)| (s + a * p, m + (a * p).abs()));
            let d = cost[j] - dot;
            let tol = escalation
                * self
                    .opts
                    .optimality_tol
                    .max(REDUCED_COST_NOISE * f64::EPSILON * (magnitude + cost[j].abs()));
            let dir = match st {
                VarState::AtLower if d < -tol => 1.0,
                VarState::AtUpper if d > tol => -1.0,
                VarState::FreeZero if d.abs() > tol => -d.signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir, d));
            }
            // strict comparison keeps the smallest index among ties
            if best.is_none_or(|(_, _, score)| d.abs() > score.abs()) {
                best = Some((j, dir, d));
            }
        }
        best
    }

    fn optimize(&mut self, cost: &[f64]) -> Result<PhaseOutcome, LpError> {
        let m = self.m;
        let mut degenerate_run = 0usize;
        let mut escalation = 1.0;
        let mut visited = HashSet::new();
        loop {
            if self.since_refactor >= REFACTOR_INTERVAL {
                self.refactor()?;
            }
            let pi = self.duals(cost);
            let bland = degenerate_run >= DEGENERATE_PIVOTS_BEFORE_BLAND;
            if bland && !visited.insert(self.fingerprint()) {
                if escalation >= MAX_NOISE_ESCALATION {
                    return Err(LpError::Cycling);
                }
                escalation *= 10.0;
                visited.clear();
            }
            let Some((enter, dir, reduced_cost)) = self.price(cost, &pi, bland, escalation) else {
                if self.since_refactor > 0 {
                    // confirm with a fresh factorisation before declaring optimality
                    self.refactor()?;
                    let pi = self.duals(cost);
                    if self.price(cost, &pi, false, escalation).is_some() {
                        continue;
                    }
                }
                return Ok(PhaseOutcome::Optimal);
            };
            if self.iterations >= self.opts.max_pivots {
                return Err(LpError::IterationLimit(self.opts.max_pivots));
            }

            // alpha = B⁻¹ A_enter
            let a_col = self.col(enter).to_vec();
            let alpha: Vec<f64> = (0..m)
                .map(|r| (0..m).map(|c| self.binv[r * m + c] * a_col[c]).sum())
                .collect();
            let alpha_max = alpha.iter().fold(0.0f64, |s, a| s.max(a.abs()));
            let piv_tol = PIVOT_TOLERANCE * alpha_max.max(1.0);

            // Ratio test. Basic variable in row r moves by -dir·alpha[r] per unit step.
            let mut step = self.upper[enter] - self.lower[enter];
            let mut leave: Option<(usize, bool)> = None; // (row, leaves at upper)
            for r in 0..m {
                let delta = -dir * alpha[r];
                if delta.abs() <= piv_tol {
                    continue;
                }
                let jb = self.basis[r];
                let (limit, to_upper) = if delta < 0.0 {
                    if !self.lower[jb].is_finite() {
                        continue;
                    }
                    (((self.x[jb] - self.lower[jb]) / -delta).max(0.0), false)
                } else {
                    if !self.upper[jb].is_finite() {
                        continue;
                    }
                    (((self.upper[jb] - self.x[jb]) / delta).max(0.0), true)
                };
                let tie = 1e-12 * step.abs().max(1e-300);
                let better = limit < step - tie;
                let tied = !better && (limit - step).abs() <= tie;
                let prefer = match leave {
                    None => better || tied,
                    Some((lr, _)) => better || (tied && jb < self.basis[lr]),
                };
                if prefer {
                    step = limit;
                    leave = Some((r, to_upper));
                }
            }
            if !step.is_finite() {
                return Ok(PhaseOutcome::Unbounded);
            }

            self.iterations += 1;
            // a pivot counts as degenerate when it does not move the objective
            let objective: f64 = cost.iter().zip(&self.x).map(|(c, x)| c * x).sum();
            if (reduced_cost * step).abs() <= 1e-14 * objective.abs().max(1.0) {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
                visited.clear();
            }

            self.x[enter] += dir * step;
            for r in 0..m {
                let jb = self.basis[r];
                self.x[jb] -= dir * alpha[r] * step;
            }

            match leave {
                None => {
                    // bound flip
                    if dir > 0.0 {
                        self.x[enter] = self.upper[enter];
                        self.state[enter] = VarState::AtUpper;
                    } else {
                        self.x[enter] = self.lower[enter];
                        self.state[enter] = VarState::AtLower;
                    }
                }
                Some((r, to_upper)) => {
                    let out = self.basis[r];
                    if to_upper {
                        self.x[out] = self.upper[out];
                        self.state[out] = VarState::AtUpper;
                    } else {
                        self.x[out] = self.lower[out];
                        self.state[out] = VarState::AtLower;
                    }
                    self.basis[r] = enter;
                    self.state[enter] = VarState::Basic(r);
                    let piv = alpha[r];
                    for c in 0..m {
                        self.binv[r * m + c] /= piv;
                    }
                    for i in 0..m {
                        if i != r && alpha[i] != 0.0 {
                            let f = alpha[i];
                            for c in 0..m {
                                self.binv[i * m + c] -= f * self.binv[r * m + c];
                            }
                        }
                    }
                    self.since_refactor += 1;
                }
            }
        }
    }

    /// Identifies the vertex: the basic set and which non-basic variables sit
    /// at their upper bounds.
    fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        let mut basis = self.basis.clone();
        basis.sort_unstable();
        basis.hash(&mut h);
        for (j, st) in self.state.iter().enumerate() {
            if matches!(st, VarState::AtUpper) {
                j.hash(&mut h);
            }
        }
        h.finish()
    }

    fn finish(&self, status: LpStatus, cost: &[f64]) -> LpSolution {
        let x: Vec<f64> = self.x[..self.n_struct]
            .iter()
            .zip(self.lp.lower.iter().zip(&self.lp.upper))
            .map(|(&v, (&l, &u))| v.clamp(l, u))
            .collect();
        let pi = self.duals(cost);
        let duals = pi.iter().zip(&self.row_scale).map(|(p, r)| p * r).collect();
        let objective = match status {
            LpStatus::Optimal => self.lp.objective_value(&x),
            _ => f64::NAN,
        };
        LpSolution {
            status,
            objective,
            x,
            duals,
            iterations: self.iterations,
        }
    }
}
