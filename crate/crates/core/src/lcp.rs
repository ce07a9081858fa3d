//! Nominal LCP(q, M): Lemke's complementary pivoting with a lexicographic ratio
//! test, and for positive semidefinite M the polyhedral description of the whole
//! solution set together with its positive-support index set.

use crate::dense::{dot, is_psd, norm_inf, IndexSet, LuFactors, Matrix, PSD_TOL};
use crate::error::{invalid, Error, Result};
use crate::lp::{solve_lp, LinearProgram, LpStatus, Sense};
use crate::tol::{TOL_COMP, TOL_FEAS, TOL_SUPPORT};

/// `0 ≤ z ⊥ Mz + q ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct NominalLcp {
    m: Matrix,
    q: Vec<f64>,
}

impl NominalLcp {
    pub fn new(m: Matrix, q: Vec<f64>) -> Result<Self> {
        if !m.is_square() || m.rows() != q.len() {
            return Err(invalid(format!(
                "LCP needs a square matrix matching q: M is {}x{}, q has {} entries",
                m.rows(),
                m.cols(),
                q.len()
            )));
        }
        crate::dense::check_finite("q", &q)?;
        Ok(Self { m, q })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn m(&self) -> &Matrix {
        &self.m
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// `Mz + q`.
    pub fn slack(&self, z: &[f64]) -> Vec<f64> {
        let mut w = self.m.mul_vec(z);
        for (wi, qi) in w.iter_mut().zip(&self.q) {
            *wi += qi;
        }
        w
    }

    /// Residuals of `z` computed directly from the definition.
    pub fn residuals(&self, z: &[f64]) -> LcpResiduals {
        let w = self.slack(z);
        LcpResiduals {
            min_z: z.iter().copied().fold(f64::INFINITY, f64::min).min(0.0),
            min_w: w.iter().copied().fold(f64::INFINITY, f64::min).min(0.0),
            complementarity: dot(z, &w).abs(),
        }
    }

    /// Whether `z` solves the LCP within the library tolerances.
    pub fn accepts(&self, z: &[f64]) -> bool {
        let r = self.residuals(z);
        let qn = norm_inf(&self.q);
        r.min_z >= -TOL_FEAS && r.min_w >= -TOL_FEAS * (1.0 + qn) && r.complementarity <= comp_tol(qn, norm_inf(z))
    }
}

fn comp_tol(q_norm: f64, z_norm: f64) -> f64 {
    TOL_COMP * (1.0 + q_norm) * (1.0 + z_norm)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LcpResiduals {
    /// `min(0, min_i z_i)`.
    pub min_z: f64,
    /// `min(0, min_i (Mz+q)_i)`.
    pub min_w: f64,
    /// `|zᵀ(Mz + q)|`.
    pub complementarity: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LcpSolution {
    pub z: Vec<f64>,
    /// `|zᵀ(Mz + q)|` at `z`.
    pub complementarity: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LemkeOutcome {
    Solved(LcpSolution),
    /// Secondary ray termination. For copositive-plus M (PSD included) this proves
    /// the LCP has no solution; otherwise it is inconclusive.
    Ray,
}

impl LemkeOutcome {
    pub fn solution(&self) -> Option<&LcpSolution> {
        match self {
            LemkeOutcome::Solved(s) => Some(s),
            LemkeOutcome::Ray => None,
        }
    }
}

/// Lemke's method with covering vector `e` and a lexicographic minimum ratio test.
pub fn solve_lemke(p: &NominalLcp) -> Result<LemkeOutcome> {
    let n = p.dim();
    if p.q.iter().all(|&v| v >= 0.0) {
        return Ok(LemkeOutcome::Solved(LcpSolution {
            z: vec![0.0; n],
            complementarity: 0.0,
        }));
    }

    // variables: w_i = i, z_i = n + i, z0 = 2n; column 2n + 1 holds the rhs.
    // Each row reads  w - M z - e z0 = q  in the initial basis {w}.
    let z0 = 2 * n;
    let rhs = 2 * n + 1;
    let mut tab = Matrix::zeros(n, 2 * n + 2);
    for i in 0..n {
        tab[(i, i)] = 1.0;
        for j in 0..n {
            tab[(i, n + j)] = -p.m[(i, j)];
        }
        tab[(i, z0)] = -1.0;
        tab[(i, rhs)] = p.q[i];
    }
    let mut basis: Vec<usize> = (0..n).collect();

    // z0 enters at the lexicographically most negative q_i row
    let first = lex_select(&tab, n, (0..n).filter(|&i| p.q[i] < 0.0), |i| -tab[(i, z0)], None);
    let first = first.expect("some q_i is negative");
    pivot(&mut tab, first, z0);
    let mut leaving = basis[first];
    basis[first] = z0;

    let limit = 1000usize.max(50 * n * n);
    let mut steps = 0;
    loop {
        if steps >= limit {
            return Err(Error::IterationLimit { solver: "lemke", limit });
        }
        steps += 1;
        let entering = if leaving < n { leaving + n } else { leaving - n };
        let rows = (0..n).filter(|&i| tab[(i, entering)] > 1e-11);
        let z0_row = basis.iter().position(|&v| v == z0);
        let Some(r) = lex_select(&tab, n, rows, |i| tab[(i, entering)], z0_row) else {
            return Ok(LemkeOutcome::Ray);
        };
        pivot(&mut tab, r, entering);
        leaving = basis[r];
        basis[r] = entering;
        if leaving == z0 {
            break;
        }
    }

    let mut z = vec![0.0; n];
    for (i, &v) in basis.iter().enumerate() {
        if (n..2 * n).contains(&v) {
            z[v - n] = tab[(i, rhs)].max(0.0);
        }
    }
    let z = refine(p, &basis, z);
    let complementarity = dot(&z, &p.slack(&z)).abs();
    Ok(LemkeOutcome::Solved(LcpSolution { z, complementarity }))
}

/// Lexicographic minimum ratio over `rows`: compares `(rhs_i, B⁻¹_i) / divisor(i)`,
/// where the first `n` tableau columns hold `B⁻¹`. Prefers `preferred` among ties.
fn lex_select(
    tab: &Matrix,
    n: usize,
    rows: impl Iterator<Item = usize>,
    divisor: impl Fn(usize) -> f64,
    preferred: Option<usize>,
) -> Option<usize> {
    let rhs = 2 * n + 1;
    let key = |i: usize| -> Vec<f64> {
        let d = divisor(i);
        std::iter::once(tab[(i, rhs)] / d)
            .chain((0..n).map(|k| tab[(i, k)] / d))
            .collect()
    };
    let mut best: Option<(usize, Vec<f64>)> = None;
    for i in rows {
        let k = key(i);
        best = match best {
            None => Some((i, k)),
            Some((bi, bk)) => match lex_compare(&k, &bk) {
                std::cmp::Ordering::Less => Some((i, k)),
                std::cmp::Ordering::Equal if Some(i) == preferred => Some((i, k)),
                _ => Some((bi, bk)),
            },
        };
    }
    // the preferred row wins any tie on the ratio itself
    if let (Some(pr), Some((bi, bk))) = (preferred, best.as_ref()) {
        if *bi != pr && divisor(pr) > 1e-11 {
            let pk = key(pr);
            if approx_eq(pk[0], bk[0]) {
                return Some(pr);
            }
        }
    }
    best.map(|(i, _)| i)
}

fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

fn lex_compare(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        if !approx_eq(*x, *y) {
            return x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal);
        }
    }
    std::cmp::Ordering::Equal
}

fn pivot(tab: &mut Matrix, r: usize, c: usize) {
    let cols = tab.cols();
    let p = tab[(r, c)];
    for j in 0..cols {
        tab[(r, j)] /= p;
    }
    for i in 0..tab.rows() {
        if i == r {
            continue;
        }
        let f = tab[(i, c)];
        if f != 0.0 {
            for j in 0..cols {
                let v = tab[(r, j)];
                tab[(i, j)] -= f * v;
            }
            tab[(i, c)] = 0.0;
        }
    }
}

/// Re-solves `M_Z z_Z = -q_Z` on the final support for accuracy; keeps the tableau
/// values if the block is singular or the refined point is worse.
fn refine(p: &NominalLcp, basis: &[usize], z: Vec<f64>) -> Vec<f64> {
    let n = p.dim();
    let support = IndexSet::from_unsorted(
        basis
            .iter()
            .filter(|&&v| (n..2 * n).contains(&v))
            .map(|&v| v - n)
            .collect(),
        n,
    )
    .expect("basis indices are in range");
    let Ok(block) = p.m.principal(&support) else {
        return z;
    };
    let Ok(Some(lu)) = LuFactors::factor(&block) else {
        return z;
    };
    let rhs: Vec<f64> = support.iter().map(|&i| -p.q[i]).collect();
    let sol = lu.solve(&rhs);
    let mut refined = vec![0.0; n];
    for (k, &i) in support.iter().enumerate() {
        refined[i] = sol[k].max(0.0);
    }
    let score = |v: &[f64]| {
        let r = p.residuals(v);
        (-r.min_z).max(-r.min_w).max(r.complementarity)
    };
    if score(&refined) <= score(&z) {
        refined
    } else {
        z
    }
}

/// The solution set of a PSD LCP, `{z ≥ 0 : q + Mz ≥ 0, qᵀ(z − z̄) = 0, (M + Mᵀ)(z − z̄) = 0}`,
/// as the rows of an LP over `z` with a zero objective.
pub fn describe_solution_set(p: &NominalLcp, zbar: &LcpSolution) -> Result<LinearProgram> {
    let n = p.dim();
    if zbar.z.len() != n {
        return Err(invalid("reference solution has the wrong dimension"));
    }
    if !is_psd(&p.m, PSD_TOL)? {
        return Err(Error::Precondition(
            "solution-set description requires a positive semidefinite M".into(),
        ));
    }
    let mut lp = LinearProgram::new(n);
    for i in 0..n {
        lp.add_dense_row(p.m.row(i), Sense::Ge, -p.q[i]);
    }
    lp.add_dense_row(&p.q, Sense::Eq, dot(&p.q, &zbar.z));
    let sym = p.m.add(&p.m.transpose());
    let target = sym.mul_vec(&zbar.z);
    for i in 0..n {
        lp.add_dense_row(sym.row(i), Sense::Eq, target[i]);
    }
    Ok(lp)
}

/// Range of `z_j` over the solution set; the upper end is `None` when unbounded.
pub fn coordinate_range(set: &LinearProgram, j: usize) -> Result<(f64, Option<f64>)> {
    let n = set.num_vars();
    let mut lp = set.clone();
    let mut c = vec![0.0; n];
    c[j] = 1.0;
    lp.set_objective(c.clone());
    let lo = solve_lp(&lp)?;
    if lo.status != LpStatus::Optimal {
        return Err(Error::Numerical(format!(
            "minimizing z_{j} over the solution set ended {:?}",
            lo.status
        )));
    }
    c[j] = -1.0;
    lp.set_objective(c);
    let hi = solve_lp(&lp)?;
    let upper = match hi.status {
        LpStatus::Optimal => Some(hi.x[j]),
        LpStatus::Unbounded => None,
        LpStatus::Infeasible => {
            return Err(Error::Numerical("solution set became infeasible".into()));
        }
    };
    Ok((lo.x[j], upper))
}

/// `P = { j : some solution has z_j > 0 }`, by maximizing each coordinate over the
/// solution set. Unbounded coordinates belong to P.
pub fn compute_support_p(p: &NominalLcp, zbar: &LcpSolution) -> Result<IndexSet> {
    let set = describe_solution_set(p, zbar)?;
    let n = p.dim();
    let mut members = Vec::new();
    for j in 0..n {
        if zbar.z[j] > TOL_SUPPORT {
            members.push(j);
            continue;
        }
        let mut lp = set.clone();
        let mut c = vec![0.0; n];
        c[j] = -1.0;
        lp.set_objective(c);
        let out = solve_lp(&lp)?;
        match out.status {
            LpStatus::Unbounded => members.push(j),
            LpStatus::Optimal if out.x[j] > TOL_SUPPORT => members.push(j),
            LpStatus::Optimal => {}
            LpStatus::Infeasible => {
                return Err(Error::Numerical(
                    "solution-set LP infeasible although a reference solution was given".into(),
                ));
            }
        }
    }
    IndexSet::new(members, n)
}
