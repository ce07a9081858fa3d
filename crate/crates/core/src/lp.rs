//! Dense bounded-variable revised simplex.
//!
//! Two phases with artificial variables, Bland's smallest-index rule for both the
//! entering and the leaving variable, and an explicit basis inverse that is updated
//! in product form and rebuilt from an LU factorization every
//! [`REFACTOR_INTERVAL`] pivots. Rows are equilibrated by their largest coefficient
//! before solving; reported points, objectives and duals are in original units.

use serde::{Deserialize, Serialize};

use crate::dense::{check_finite, dot, LuFactors, Matrix};
use crate::error::{invalid, Error, Result};

/// Primal feasibility tolerance on equilibrated rows.
pub const TOL_FEAS: f64 = 1e-8;
/// Optimality tolerance on reduced costs.
pub const TOL_OBJ: f64 = 1e-8;
/// Bounds at or beyond this magnitude are treated as infinite.
pub const INFINITE_BOUND: f64 = 1e30;
pub const REFACTOR_INTERVAL: usize = 50;

const PIVOT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

/// `min cᵀx  s.t.  A x (≤|=|≥) b,  l ≤ x ≤ u`.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    objective: Vec<f64>,
    a: Matrix,
    senses: Vec<Sense>,
    rhs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl LinearProgram {
    /// `num_vars` variables with bounds `[0, ∞)`, zero objective and no rows.
    pub fn new(num_vars: usize) -> Self {
        Self {
            objective: vec![0.0; num_vars],
            a: Matrix::zeros(0, num_vars),
            senses: Vec::new(),
            rhs: Vec::new(),
            lower: vec![0.0; num_vars],
            upper: vec![f64::INFINITY; num_vars],
        }
    }

    pub fn from_dense(
        objective: Vec<f64>,
        a: Matrix,
        senses: Vec<Sense>,
        rhs: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<Self> {
        let lp = Self {
            objective,
            a,
            senses,
            rhs,
            lower,
            upper,
        };
        lp.validate()?;
        Ok(lp)
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.senses.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraint_matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn senses(&self) -> &[Sense] {
        &self.senses
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn set_objective(&mut self, objective: Vec<f64>) {
        assert_eq!(objective.len(), self.num_vars());
        self.objective = objective;
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn fix(&mut self, var: usize, value: f64) {
        self.set_bounds(var, value, value);
    }

    pub fn free(&mut self, var: usize) {
        self.set_bounds(var, f64::NEG_INFINITY, f64::INFINITY);
    }

    /// Adds a row given as `(variable, coefficient)` terms; repeated variables accumulate.
    pub fn add_row(&mut self, terms: &[(usize, f64)], sense: Sense, rhs: f64) {
        let mut row = vec![0.0; self.num_vars()];
        for &(j, c) in terms {
            row[j] += c;
        }
        self.add_dense_row(&row, sense, rhs);
    }

    pub fn add_dense_row(&mut self, row: &[f64], sense: Sense, rhs: f64) {
        assert_eq!(row.len(), self.num_vars(), "row length must equal the variable count");
        self.a.push_row(row);
        self.senses.push(sense);
        self.rhs.push(rhs);
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let m = self.senses.len();
        if self.a.cols() != n || self.a.rows() != m || self.rhs.len() != m {
            return Err(invalid(format!(
                "LP dimensions disagree: {} variables, matrix {}x{}, {} senses, {} rhs entries",
                n,
                self.a.rows(),
                self.a.cols(),
                m,
                self.rhs.len()
            )));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(invalid("bound vectors must have one entry per variable"));
        }
        check_finite("objective", &self.objective)?;
        check_finite("rhs", &self.rhs)?;
        check_finite("constraint matrix", self.a.as_slice())?;
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] > self.upper[j] {
                return Err(invalid(format!(
                    "variable {j} has bounds [{}, {}]",
                    self.lower[j], self.upper[j]
                )));
            }
            if self.lower[j] >= INFINITE_BOUND || self.upper[j] <= -INFINITE_BOUND {
                return Err(invalid(format!("variable {j} has an infinite fixed bound")));
            }
        }
        Ok(())
    }

    /// Largest violation of rows and bounds at `x`, each row measured relative to
    /// `1 + max|a_ij|`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.num_vars());
        let mut worst: f64 = 0.0;
        for j in 0..x.len() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        for i in 0..self.num_rows() {
            let row = self.a.row(i);
            let scale = 1.0 + row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let lhs = dot(row, x);
            let v = match self.senses[i] {
                Sense::Le => lhs - self.rhs[i],
                Sense::Ge => self.rhs[i] - lhs,
                Sense::Eq => (lhs - self.rhs[i]).abs(),
            };
            worst = worst.max(v / scale);
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Primal point; meaningful when `status` is optimal.
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row multipliers from the final basis (empty for pure feasibility runs).
    /// Sign convention: `c - Aᵀy` is the vector of reduced costs.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

impl LpOutcome {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Minimizes the objective.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome> {
    lp.validate()?;
    Simplex::new(lp).run(true)
}

/// Phase 1 only; the objective is ignored and `Optimal` means a feasible point was found.
pub fn check_feasibility(lp: &LinearProgram) -> Result<LpOutcome> {
    lp.validate()?;
    Simplex::new(lp).run(false)
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    FreeZero,
}

struct Simplex {
    m: usize,
    n: usize,
    a: Matrix,
    b: Vec<f64>,
    row_scale: Vec<f64>,
    /// Internal variable j is the original divided by `col_scale[j]`.
    col_scale: Vec<f64>,
    /// Unscaled structural bounds, so nonbasic values come back exactly.
    orig_bounds: Vec<(f64, f64)>,
    art_sign: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    objective: Vec<f64>,
    state: Vec<VarState>,
    x: Vec<f64>,
    basis: Vec<usize>,
    binv: Matrix,
    since_refactor: usize,
    iterations: usize,
    limit: usize,
}

/// Geometric-mean row and column scaling followed by a final row max-equilibration,
/// applied in place. Returns `(row_scale, col_scale)`: original row i is the scaled
/// row times `row_scale[i]`, original variable j is the scaled one times `col_scale[j]`.
fn equilibrate(a: &mut Matrix) -> (Vec<f64>, Vec<f64>) {
    let (m, n) = (a.rows(), a.cols());
    let mut row_scale = vec![1.0; m];
    let mut col_scale = vec![1.0; n];
    let spread = |vals: &mut dyn Iterator<Item = f64>| -> Option<f64> {
        let (lo, hi) = vals
            .filter(|v| *v != 0.0)
            .map(f64::abs)
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
        (hi > 0.0).then(|| (lo * hi).sqrt())
    };
    for _ in 0..4 {
        for i in 0..m {
            if let Some(s) = spread(&mut (0..n).map(|j| a[(i, j)])) {
                row_scale[i] *= s;
                for j in 0..n {
                    a[(i, j)] /= s;
                }
            }
        }
        for j in 0..n {
            if let Some(s) = spread(&mut (0..m).map(|i| a[(i, j)])) {
                col_scale[j] /= s;
                for i in 0..m {
                    a[(i, j)] /= s;
                }
            }
        }
    }
    for i in 0..m {
        let s = a.row(i).iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if s > 0.0 {
            row_scale[i] *= s;
            for j in 0..n {
                a[(i, j)] /= s;
            }
        }
    }
    (row_scale, col_scale)
}

fn finite(v: f64) -> bool {
    v.abs() < INFINITE_BOUND
}

impl Simplex {
    fn new(lp: &LinearProgram) -> Self {
        let m = lp.num_rows();
        let n = lp.num_vars();
        let ntot = n + 2 * m;

        let mut a = lp.a.clone();
        let (row_scale, col_scale) = equilibrate(&mut a);
        let b: Vec<f64> = lp.rhs.iter().zip(&row_scale).map(|(v, s)| v / s).collect();

        let mut lower = vec![0.0; ntot];
        let mut upper = vec![f64::INFINITY; ntot];
        for j in 0..n {
            let s = col_scale[j];
            lower[j] = if finite(lp.lower[j]) {
                lp.lower[j] / s
            } else {
                f64::NEG_INFINITY
            };
            upper[j] = if finite(lp.upper[j]) {
                lp.upper[j] / s
            } else {
                f64::INFINITY
            };
        }
        // slack s_i with a_i x + s_i = b_i
        for (i, sense) in lp.senses.iter().enumerate() {
            let (lo, hi) = match sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lower[n + i] = lo;
            upper[n + i] = hi;
        }

        let mut state = vec![VarState::AtLower; ntot];
        let mut x = vec![0.0; ntot];
        for j in 0..n {
            if lower[j].is_finite() {
                x[j] = lower[j];
                state[j] = VarState::AtLower;
            } else if upper[j].is_finite() {
                x[j] = upper[j];
                state[j] = VarState::AtUpper;
            } else {
                state[j] = VarState::FreeZero;
            }
        }

        let mut basis = vec![0; m];
        let mut art_sign = vec![1.0; m];
        let mut binv = Matrix::identity(m);
        for i in 0..m {
            let residual = b[i] - dot(a.row(i), &x[..n]);
            let slack = n + i;
            let art = n + m + i;
            if residual >= lower[slack] && residual <= upper[slack] {
                basis[i] = slack;
                state[slack] = VarState::Basic(i);
                x[slack] = residual;
                // unused artificial stays fixed at zero
                upper[art] = 0.0;
                state[art] = VarState::AtLower;
            } else {
                art_sign[i] = if residual >= 0.0 { 1.0 } else { -1.0 };
                binv[(i, i)] = art_sign[i];
                basis[i] = art;
                state[art] = VarState::Basic(i);
                x[art] = residual.abs();
                state[slack] = VarState::AtLower;
                x[slack] = 0.0;
                if !lower[slack].is_finite() {
                    state[slack] = VarState::AtUpper;
                }
            }
        }

        let mut objective = vec![0.0; ntot];
        for j in 0..n {
            objective[j] = lp.objective[j] * col_scale[j];
        }

        Self {
            m,
            n,
            a,
            b,
            row_scale,
            col_scale,
            orig_bounds: (0..n).map(|j| (lp.lower[j], lp.upper[j])).collect(),
            art_sign,
            lower,
            upper,
            cost: vec![0.0; ntot],
            objective,
            state,
            x,
            basis,
            binv,
            since_refactor: 0,
            iterations: 0,
            limit: 50 * (m + n).max(1),
        }
    }

    fn ntot(&self) -> usize {
        self.n + 2 * self.m
    }

    /// Column `j` of `[A | I | diag(sign)]`.
    fn column(&self, j: usize) -> Vec<f64> {
        let mut col = vec![0.0; self.m];
        if j < self.n {
            for (i, c) in col.iter_mut().enumerate() {
                *c = self.a[(i, j)];
            }
        } else if j < self.n + self.m {
            col[j - self.n] = 1.0;
        } else {
            let i = j - self.n - self.m;
            col[i] = self.art_sign[i];
        }
        col
    }

    fn binv_times_column(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        if j >= self.n {
            let (i, s) = if j < self.n + m {
                (j - self.n, 1.0)
            } else {
                let i = j - self.n - m;
                (i, self.art_sign[i])
            };
            return (0..m).map(|r| s * self.binv[(r, i)]).collect();
        }
        let col = self.column(j);
        self.binv.mul_vec(&col)
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        let mut bmat = Matrix::zeros(m, m);
        for (r, &j) in self.basis.iter().enumerate() {
            let col = self.column(j);
            for i in 0..m {
                bmat[(i, r)] = col[i];
            }
        }
        let lu = LuFactors::factor(&bmat)?.ok_or_else(|| Error::Numerical("simplex basis became singular".into()))?;
        self.binv = lu.inverse();
        self.since_refactor = 0;
        Ok(())
    }

    /// Recomputes basic values from the nonbasic ones.
    fn update_basics(&mut self) {
        let m = self.m;
        let n = self.n;
        let mut rhs = self.b.clone();
        for j in 0..self.ntot() {
            if matches!(self.state[j], VarState::Basic(_)) || self.x[j] == 0.0 {
                continue;
            }
            let v = self.x[j];
            if j < n {
                for (i, r) in rhs.iter_mut().enumerate() {
                    *r -= self.a[(i, j)] * v;
                }
            } else if j < n + m {
                rhs[j - n] -= v;
            } else {
                let i = j - n - m;
                rhs[i] -= self.art_sign[i] * v;
            }
        }
        let xb = self.binv.mul_vec(&rhs);
        for (r, &j) in self.basis.iter().enumerate() {
            self.x[j] = xb[r];
        }
    }

    fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (r, &j) in self.basis.iter().enumerate() {
            let c = self.cost[j];
            if c != 0.0 {
                for (k, yk) in y.iter_mut().enumerate() {
                    *yk += c * self.binv[(r, k)];
                }
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        let n = self.n;
        let m = self.m;
        if j < n {
            self.cost[j] - (0..m).map(|i| y[i] * self.a[(i, j)]).sum::<f64>()
        } else if j < n + m {
            self.cost[j] - y[j - n]
        } else {
            let i = j - n - m;
            self.cost[j] - self.art_sign[i] * y[i]
        }
    }

    /// Runs simplex iterations on the current cost vector until optimal or unbounded.
    fn iterate(&mut self) -> Result<bool> {
        loop {
            if self.iterations >= self.limit {
                return Err(Error::IterationLimit {
                    solver: "simplex",
                    limit: self.limit,
                });
            }
            self.update_basics();
            let y = self.duals();

            // Bland: first eligible index
            let mut entering = None;
            for j in 0..self.ntot() {
                let st = self.state[j];
                if matches!(st, VarState::Basic(_)) || self.lower[j] == self.upper[j] {
                    continue;
                }
                let d = self.reduced_cost(j, &y);
                let dir = match st {
                    VarState::AtLower if d < -TOL_OBJ => 1.0,
                    VarState::AtUpper if d > TOL_OBJ => -1.0,
                    VarState::FreeZero if d < -TOL_OBJ => 1.0,
                    VarState::FreeZero if d > TOL_OBJ => -1.0,
                    _ => continue,
                };
                entering = Some((j, dir));
                break;
            }
            let Some((q, dir)) = entering else {
                return Ok(true);
            };

            let alpha = self.binv_times_column(q);

            // ratio test; candidates are (step, variable index, row or None for a bound flip)
            let mut best: Option<(f64, usize, Option<usize>)> = None;
            let mut consider = |step: f64, var: usize, row: Option<usize>| {
                let step = step.max(0.0);
                let better = match best {
                    None => true,
                    Some((s, v, _)) => {
                        let tie = (step - s).abs() <= 1e-12 * (1.0 + s.abs());
                        (step < s && !tie) || (tie && var < v)
                    }
                };
                if better {
                    best = Some((step, var, row));
                }
            };
            if self.lower[q].is_finite() && self.upper[q].is_finite() {
                consider(self.upper[q] - self.lower[q], q, None);
            }
            for (r, &bj) in self.basis.iter().enumerate() {
                let rate = -dir * alpha[r];
                if rate < -PIVOT_TOL && self.lower[bj].is_finite() {
                    consider((self.x[bj] - self.lower[bj]) / -rate, bj, Some(r));
                } else if rate > PIVOT_TOL && self.upper[bj].is_finite() {
                    consider((self.upper[bj] - self.x[bj]) / rate, bj, Some(r));
                }
            }
            let Some((step, _, row)) = best else {
                return Ok(false);
            };

            self.iterations += 1;
            self.x[q] += dir * step;
            match row {
                None => {
                    self.state[q] = if dir > 0.0 {
                        VarState::AtUpper
                    } else {
                        VarState::AtLower
                    };
                    self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
                }
                Some(r) => {
                    let leaving = self.basis[r];
                    let rate = -dir * alpha[r];
                    if rate < 0.0 {
                        self.state[leaving] = VarState::AtLower;
                        self.x[leaving] = self.lower[leaving];
                    } else {
                        self.state[leaving] = VarState::AtUpper;
                        self.x[leaving] = self.upper[leaving];
                    }
                    self.basis[r] = q;
                    self.state[q] = VarState::Basic(r);

                    let m = self.m;
                    let piv = alpha[r];
                    for k in 0..m {
                        self.binv[(r, k)] /= piv;
                    }
                    for i in 0..m {
                        if i != r && alpha[i] != 0.0 {
                            let f = alpha[i];
                            for k in 0..m {
                                let v = self.binv[(r, k)];
                                self.binv[(i, k)] -= f * v;
                            }
                        }
                    }
                    self.since_refactor += 1;
                    if self.since_refactor >= REFACTOR_INTERVAL {
                        self.refactor()?;
                    }
                }
            }
        }
    }

    fn run(mut self, optimize: bool) -> Result<LpOutcome> {
        let n = self.n;
        let m = self.m;

        // phase 1: minimize the sum of artificials
        for i in 0..m {
            self.cost[n + m + i] = 1.0;
        }
        self.iterate()?;
        self.update_basics();
        let infeasibility: f64 = (0..m).map(|i| self.x[n + m + i].max(0.0)).sum();
        let tol = TOL_FEAS * (1.0 + self.b.iter().fold(0.0f64, |acc, v| acc.max(v.abs())));
        if infeasibility > tol {
            return Ok(self.outcome(LpStatus::Infeasible, false));
        }
        for i in 0..m {
            let art = n + m + i;
            self.cost[art] = 0.0;
            self.upper[art] = 0.0;
            if !matches!(self.state[art], VarState::Basic(_)) {
                self.state[art] = VarState::AtLower;
                self.x[art] = 0.0;
            }
        }
        if !optimize {
            return Ok(self.outcome(LpStatus::Optimal, false));
        }

        self.cost.clone_from(&self.objective);
        let bounded = self.iterate()?;
        self.update_basics();
        let status = if bounded {
            LpStatus::Optimal
        } else {
            LpStatus::Unbounded
        };
        Ok(self.outcome(status, bounded))
    }

    fn outcome(&self, status: LpStatus, with_duals: bool) -> LpOutcome {
        let n = self.n;
        let mut x = self.x[..n].to_vec();
        // snap to bounds that were overshot by rounding
        for (j, v) in x.iter_mut().enumerate() {
            if *v < self.lower[j] {
                *v = self.lower[j];
            } else if *v > self.upper[j] {
                *v = self.upper[j];
            }
        }
        let objective = dot(&self.objective[..n], &x);
        for (j, (v, s)) in x.iter_mut().zip(&self.col_scale).enumerate() {
            let (lo, hi) = self.orig_bounds[j];
            *v = match self.state[j] {
                VarState::AtLower => lo,
                VarState::AtUpper => hi,
                _ => (*v * s).clamp(lo, hi),
            };
        }
        let duals = if with_duals {
            self.duals().iter().zip(&self.row_scale).map(|(y, s)| y / s).collect()
        } else {
            Vec::new()
        };
        LpOutcome {
            status,
            x,
            objective,
            duals,
            iterations: self.iterations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_var(lo: f64, hi: f64) -> LinearProgram {
        let mut lp = LinearProgram::new(1);
        lp.set_bounds(0, lo, hi);
        lp
    }

    #[test]
    fn min_x_with_lower_row() {
        let mut lp = single_var(f64::NEG_INFINITY, f64::INFINITY);
        lp.set_objective(vec![1.0]);
        lp.add_row(&[(0, 1.0)], Sense::Ge, 3.0);
        let out = solve_lp(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.x[0] - 3.0).abs() < 1e-12);
        assert!((out.objective - 3.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut lp = LinearProgram::new(1);
        lp.add_row(&[(0, 1.0)], Sense::Le, -1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);

        let mut lp = LinearProgram::new(1);
        lp.add_row(&[(0, 1.0)], Sense::Eq, 1.0);
        lp.add_row(&[(0, 1.0)], Sense::Eq, 2.0);
        assert_eq!(check_feasibility(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn feasibility_returns_point() {
        let mut lp = LinearProgram::new(1);
        lp.add_row(&[(0, 1.0)], Sense::Eq, 1.0);
        let out = check_feasibility(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.x[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![-1.0, 0.0]);
        lp.add_row(&[(0, 1.0), (1, -1.0)], Sense::Le, 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn textbook_lp() {
        // max x + 2y s.t. x + y <= 4, x <= 2, y <= 3
        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![-1.0, -2.0]);
        lp.add_row(&[(0, 1.0), (1, 1.0)], Sense::Le, 4.0);
        lp.add_row(&[(0, 1.0)], Sense::Le, 2.0);
        lp.add_row(&[(1, 1.0)], Sense::Le, 3.0);
        let out = solve_lp(&lp).unwrap();
        assert!((out.objective + 7.0).abs() < 1e-10);
        assert!((out.x[0] - 1.0).abs() < 1e-10 && (out.x[1] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn bounded_and_free_variables() {
        // min -x + y, x in [-2, 5], y free, y >= x - 1, y >= -x
        let mut lp = LinearProgram::new(2);
        lp.set_bounds(0, -2.0, 5.0);
        lp.free(1);
        lp.set_objective(vec![-1.0, 1.0]);
        lp.add_row(&[(1, 1.0), (0, -1.0)], Sense::Ge, -1.0);
        lp.add_row(&[(1, 1.0), (0, 1.0)], Sense::Ge, 0.0);
        let out = solve_lp(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.objective + 1.0).abs() < 1e-10, "{out:?}");
        assert!(lp.max_violation(&out.x) < 1e-10);
    }

    #[test]
    fn rejects_bad_dimensions_and_bounds() {
        let mut lp = LinearProgram::new(1);
        lp.set_bounds(0, 2.0, 1.0);
        assert!(matches!(solve_lp(&lp), Err(Error::InvalidArgument(_))));
        let bad = LinearProgram::from_dense(
            vec![0.0; 2],
            Matrix::zeros(1, 3),
            vec![Sense::Le],
            vec![0.0],
            vec![0.0; 2],
            vec![1.0; 2],
        );
        assert!(matches!(bad, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example, cycles under the largest-coefficient rule without Bland
        let mut lp = LinearProgram::new(4);
        lp.set_objective(vec![-0.75, 150.0, -0.02, 6.0]);
        lp.add_row(&[(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], Sense::Le, 0.0);
        lp.add_row(&[(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], Sense::Le, 0.0);
        lp.add_row(&[(2, 1.0)], Sense::Le, 1.0);
        let out = solve_lp(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.objective + 0.05).abs() < 1e-10, "{}", out.objective);
    }
}
