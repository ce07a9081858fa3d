//! LCPs whose matrix `M(ζ) = M⁰ + Σ ζ_i Mⁱ` varies over `ζ ∈ [−1, 1]ᵏ` with fixed q,
//! solved for affine rules `z(ζ) = Dζ + r`.
//!
//! For a support J with `M⁰_J` invertible the rule is determined in closed form; it is
//! an AAR solution exactly when a kernel condition on `q_J` holds and the rule stays
//! nonnegative with nonnegative off-support slacks over the whole box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boxqp::BoxQuadratic;
use crate::dense::{invert, min_symmetric_eigenvalue, norm_inf, subsets_by_cardinality, IndexSet, Matrix, PSD_TOL};
use crate::error::{invalid, Error, Result};
use crate::tol::{TOL_FEAS, TOL_SUPPORT};
use crate::verification::{box_min_affine, Condition, ConditionRecord, UniquenessVerdict, VerificationReport};

/// Largest `n − h` accepted by [`solve_enumeration_m`].
pub const ENUMERATION_MAX_FREE: usize = 20;
/// Largest `n` accepted by [`solve_enumeration_m`]; every subset of `[n]` is visited.
pub const ENUMERATION_MAX_DIM: usize = 24;
/// Box points used to re-check accepted candidates.
pub const RESAMPLE_POINTS: usize = 1000;
const RESAMPLE_SEED: u64 = 0x5eed;

#[derive(Clone, Debug, PartialEq)]
pub struct UncertainLcpM {
    m0: Matrix,
    perturbations: Vec<Matrix>,
    q: Vec<f64>,
    h: usize,
}

impl UncertainLcpM {
    pub fn new(m0: Matrix, perturbations: Vec<Matrix>, q: Vec<f64>, h: usize) -> Result<Self> {
        let n = q.len();
        if perturbations.is_empty() {
            return Err(invalid("at least one perturbation matrix is required"));
        }
        for (i, mat) in std::iter::once(&m0).chain(&perturbations).enumerate() {
            if mat.rows() != n || mat.cols() != n {
                return Err(invalid(format!(
                    "matrix M{i} is {}x{}, expected {n}x{n}",
                    mat.rows(),
                    mat.cols()
                )));
            }
        }
        crate::dense::check_finite("q", &q)?;
        if h > n {
            return Err(invalid(format!("h = {h} exceeds n = {n}")));
        }
        Ok(Self {
            m0,
            perturbations,
            q,
            h,
        })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    /// Number of uncertain parameters k.
    pub fn k(&self) -> usize {
        self.perturbations.len()
    }

    pub fn m0(&self) -> &Matrix {
        &self.m0
    }

    /// `Mⁱ` for `i` in `1..=k`.
    pub fn perturbation(&self, i: usize) -> &Matrix {
        &self.perturbations[i - 1]
    }

    pub fn perturbations(&self) -> &[Matrix] {
        &self.perturbations
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn h(&self) -> usize {
        self.h
    }

    /// `M(ζ)`.
    pub fn matrix_at(&self, zeta: &[f64]) -> Matrix {
        let mut m = self.m0.clone();
        for (z, p) in zeta.iter().zip(&self.perturbations) {
            m = m.add(&p.scale(*z));
        }
        m
    }

    pub fn verification_tol(&self) -> f64 {
        TOL_FEAS * (1.0 + norm_inf(&self.q))
    }
}

/// Decision rule `z(ζ) = Dζ + r`, `D` of size n × k.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineSolutionM {
    pub d: Matrix,
    pub r: Vec<f64>,
}

impl AffineSolutionM {
    pub fn new(d: Matrix, r: Vec<f64>) -> Result<Self> {
        if d.rows() != r.len() {
            return Err(invalid("D must have one row per entry of r"));
        }
        crate::dense::check_finite("r", &r)?;
        Ok(Self { d, r })
    }

    pub fn zero(n: usize, k: usize) -> Self {
        Self {
            d: Matrix::zeros(n, k),
            r: vec![0.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.r.len()
    }

    /// `J = {j : r_j > tol_support}`.
    pub fn support(&self) -> IndexSet {
        IndexSet::from_predicate(self.dim(), |i| self.r[i] > TOL_SUPPORT)
    }

    pub fn zero_set(&self) -> IndexSet {
        self.support().complement(self.dim())
    }

    pub fn eval(&self, zeta: &[f64]) -> Vec<f64> {
        let mut z = self.d.mul_vec(zeta);
        for (zi, ri) in z.iter_mut().zip(&self.r) {
            *zi += ri;
        }
        z
    }

    pub fn distance(&self, other: &AffineSolutionM) -> f64 {
        self.d
            .max_abs_diff(&other.d)
            .max(crate::dense::max_abs_diff(&self.r, &other.r))
    }
}

fn check_dims(inst: &UncertainLcpM, sol: &AffineSolutionM) -> Result<()> {
    if sol.dim() != inst.dim() || sol.d.cols() != inst.k() {
        return Err(invalid(format!(
            "solution has D {}x{}, instance needs {}x{}",
            sol.d.rows(),
            sol.d.cols(),
            inst.dim(),
            inst.k()
        )));
    }
    Ok(())
}

/// Row i of `M(ζ)z(ζ) + q` as a polynomial in ζ: constant, linear coefficients and the
/// (unsymmetrized) quadratic coefficients `A_lm = Mˡ_{i,·} D_{·,m}`.
fn row_polynomial(inst: &UncertainLcpM, sol: &AffineSolutionM, i: usize) -> (f64, Vec<f64>, Matrix) {
    let k = inst.k();
    let dot_row = |m: &Matrix, v: &[f64]| -> f64 { m.row(i).iter().zip(v).map(|(a, b)| a * b).sum() };
    let dcols: Vec<Vec<f64>> = (0..k).map(|l| sol.d.col(l)).collect();
    let constant = dot_row(&inst.m0, &sol.r) + inst.q[i];
    let linear = (0..k)
        .map(|l| dot_row(&inst.m0, &dcols[l]) + dot_row(&inst.perturbations[l], &sol.r))
        .collect();
    let mut quad = Matrix::zeros(k, k);
    for l in 0..k {
        for (m, dm) in dcols.iter().enumerate() {
            quad[(l, m)] = dot_row(&inst.perturbations[l], dm);
        }
    }
    (constant, linear, quad)
}

/// Largest coefficient of `(M(ζ)z(ζ) + q)_J` as a polynomial in ζ. The coefficients are
/// exactly the left-hand sides of the necessary block equations.
fn support_identity_residual(inst: &UncertainLcpM, sol: &AffineSolutionM) -> (f64, Option<usize>) {
    let k = inst.k();
    let mut worst = (0.0, None);
    for &i in &sol.support() {
        let (c, b, a) = row_polynomial(inst, sol, i);
        let mut size = c.abs();
        for l in 0..k {
            size = size.max(b[l].abs()).max(a[(l, l)].abs());
            for m in l + 1..k {
                size = size.max((a[(l, m)] + a[(m, l)]).abs());
            }
        }
        if worst.1.is_none() || size > worst.0 {
            worst = (size, Some(i));
        }
    }
    worst
}

/// Whether `M⁰_J r_J + q_J = 0`, `Mⁱ_J r_J + M⁰_J D_{J,i} = 0`, `Mⁱ_J D_{J,i} = 0` and
/// `Mⁱ_J D_{J,j} + Mʲ_J D_{J,i} = 0` hold within tolerance (J the support of r).
pub fn check_necessary_m(inst: &UncertainLcpM, sol: &AffineSolutionM) -> Result<bool> {
    check_dims(inst, sol)?;
    let j = sol.support();
    let k = inst.k();
    let tol = inst.verification_tol();
    let block =
        |m: &Matrix, v: &[f64]| -> Vec<f64> { j.iter().map(|&a| j.iter().map(|&b| m[(a, b)] * v[b]).sum()).collect() };
    let small = |v: &[f64]| v.iter().all(|x| x.abs() <= tol);
    let qj: Vec<f64> = block(&inst.m0, &sol.r)
        .iter()
        .zip(j.iter())
        .map(|(a, &i)| a + inst.q[i])
        .collect();
    if !small(&qj) {
        return Ok(false);
    }
    let dcols: Vec<Vec<f64>> = (0..k).map(|l| sol.d.col(l)).collect();
    for i in 0..k {
        let mi = &inst.perturbations[i];
        let second: Vec<f64> = block(mi, &sol.r)
            .iter()
            .zip(block(&inst.m0, &dcols[i]))
            .map(|(a, b)| a + b)
            .collect();
        if !small(&second) || !small(&block(mi, &dcols[i])) {
            return Ok(false);
        }
        for jj in i + 1..k {
            let mj = &inst.perturbations[jj];
            let cross: Vec<f64> = block(mi, &dcols[jj])
                .iter()
                .zip(block(mj, &dcols[i]))
                .map(|(a, b)| a + b)
                .collect();
            if !small(&cross) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `(M⁰_J)⁻¹ Mⁱ_J (M⁰_J)⁻¹` for `i` in `1..=k`, or `None` when `M⁰_J` is singular.
pub fn mtilde(inst: &UncertainLcpM, j: &IndexSet, i: usize) -> Result<Option<Matrix>> {
    if i == 0 || i > inst.k() {
        return Err(invalid(format!("perturbation index {i} outside 1..={}", inst.k())));
    }
    let Some(inv) = invert(&inst.m0.principal(j)?)? else {
        return Ok(None);
    };
    let mi = inst.perturbation(i).principal(j)?;
    Ok(Some(inv.matmul(&mi).matmul(&inv)))
}

/// `r_J = −(M⁰_J)⁻¹ q_J`, `D_{J,i} = M̃^{J,i} q_J`, zero elsewhere; `None` when `M⁰_J`
/// is singular. The candidate is not validated.
pub fn characterize_for_j(inst: &UncertainLcpM, j: &IndexSet) -> Result<Option<AffineSolutionM>> {
    let (n, k) = (inst.dim(), inst.k());
    let mut sol = AffineSolutionM::zero(n, k);
    if j.is_empty() {
        return Ok(Some(sol));
    }
    if j.as_slice().last().is_some_and(|&v| v >= n) {
        return Err(invalid("subset index out of range"));
    }
    let Some(inv) = invert(&inst.m0.principal(j)?)? else {
        return Ok(None);
    };
    let qj = j.gather(&inst.q);
    let rj = inv.mul_vec(&qj);
    for (a, &p) in j.iter().enumerate() {
        sol.r[p] = -rj[a];
    }
    for i in 0..k {
        let mi = inst.perturbations[i].principal(j)?;
        let col = inv.mul_vec(&mi.mul_vec(&inv.mul_vec(&qj)));
        for (a, &p) in j.iter().enumerate() {
            sol.d[(p, i)] = col[a];
        }
    }
    Ok(Some(sol))
}

/// `(Mⁱ_J M̃^{J,j} + Mʲ_J M̃^{J,i}) q_J = 0` for all `i, j` (including `i = j`).
pub fn check_kernel_condition(inst: &UncertainLcpM, j: &IndexSet) -> Result<bool> {
    let tol = inst.verification_tol();
    if j.is_empty() {
        return Ok(true);
    }
    let Some(inv) = invert(&inst.m0.principal(j)?)? else {
        return Err(Error::Precondition(format!("M⁰ restricted to {j} is singular")));
    };
    let qj = j.gather(&inst.q);
    let k = inst.k();
    let blocks: Vec<Matrix> = inst
        .perturbations
        .iter()
        .map(|m| m.principal(j))
        .collect::<Result<_>>()?;
    // M̃^{J,i} q_J
    let mq: Vec<Vec<f64>> = blocks
        .iter()
        .map(|mi| inv.mul_vec(&mi.mul_vec(&inv.mul_vec(&qj))))
        .collect();
    for a in 0..k {
        for b in a..k {
            let lhs = blocks[a].mul_vec(&mq[b]);
            let rhs = blocks[b].mul_vec(&mq[a]);
            if lhs.iter().zip(&rhs).any(|(x, y)| (x + y).abs() > tol) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Worst case over the box of the off-support slacks `(M(ζ)z(ζ) + q)_N`, each a
/// quadratic in ζ, and whether every minimum was computed exactly.
fn off_support_record(
    inst: &UncertainLcpM,
    sol: &AffineSolutionM,
    rows: &IndexSet,
    tol: f64,
) -> Result<ConditionRecord> {
    let mut worst: (f64, Option<usize>, Vec<f64>) = (f64::INFINITY, None, Vec::new());
    let mut exact = true;
    for &i in rows {
        let (c, b, a) = row_polynomial(inst, sol, i);
        let min = BoxQuadratic::new(&a, b, c)?.minimize();
        exact &= min.exact;
        if min.value < worst.0 {
            worst = (min.value, Some(i), min.point);
        }
    }
    let residual = if worst.1.is_some() { (-worst.0).max(0.0) } else { 0.0 };
    let mut rec = ConditionRecord::new(Condition::OffSupportSlack, residual, tol, worst.1, worst.2);
    rec.exact = exact;
    Ok(rec)
}

fn nonnegativity_record(inst: &UncertainLcpM, sol: &AffineSolutionM, tol: f64) -> ConditionRecord {
    let k = inst.k();
    let ones = vec![1.0; k];
    let mut worst: (f64, Option<usize>, Vec<f64>) = (f64::INFINITY, None, Vec::new());
    for i in 0..inst.dim() {
        let (v, z) = box_min_affine(sol.d.row(i), sol.r[i], &ones);
        if v < worst.0 {
            worst = (v, Some(i), z);
        }
    }
    let residual = if worst.1.is_some() { (-worst.0).max(0.0) } else { 0.0 };
    ConditionRecord::new(Condition::Nonnegativity, residual, tol, worst.1, worst.2)
}

/// Box conditions for a candidate on support J: `z_J(ζ) ≥ 0` (affine, analytic minimum)
/// and `(M(ζ)z(ζ) + q)_N ≥ 0` (quadratic, exact face enumeration up to k = 10).
pub fn check_box_conditions(inst: &UncertainLcpM, j: &IndexSet, cand: &AffineSolutionM) -> Result<VerificationReport> {
    check_dims(inst, cand)?;
    let tol = inst.verification_tol();
    let n = inst.dim();
    let nset = j.complement(n);
    let records = vec![
        nonnegativity_record(inst, cand, tol),
        off_support_record(inst, cand, &nset, tol)?,
    ];
    Ok(VerificationReport::from_records(records))
}

/// Exact check that `z(ζ) = Dζ + r` solves the LCP for every `ζ` in the box: nonnegativity,
/// the support rows vanishing identically, `z_N ≡ 0` and nonnegative off-support slacks.
pub fn verify_affine_m(inst: &UncertainLcpM, sol: &AffineSolutionM) -> Result<VerificationReport> {
    check_dims(inst, sol)?;
    let tol = inst.verification_tol();
    for i in 0..inst.h {
        if (0..inst.k()).any(|l| sol.d[(i, l)].abs() > tol) {
            return Err(invalid(format!("here-and-now row {i} of D is nonzero")));
        }
    }
    let nset = sol.zero_set();
    let (ident, ident_row) = support_identity_residual(inst, sol);
    let mut off_zero = (0.0, None);
    for &i in &nset {
        let size = (0..inst.k())
            .map(|l| sol.d[(i, l)].abs())
            .fold(sol.r[i].abs(), f64::max);
        if off_zero.1.is_none() || size > off_zero.0 {
            off_zero = (size, Some(i));
        }
    }
    let records = vec![
        nonnegativity_record(inst, sol, tol),
        ConditionRecord::new(Condition::NecessaryEquations, ident, tol, ident_row, Vec::new()),
        ConditionRecord::new(Condition::OffSupportZero, off_zero.0, tol, off_zero.1, Vec::new()),
        off_support_record(inst, sol, &nset, tol)?,
    ];
    Ok(VerificationReport::from_records(records))
}

/// Largest violation of `z ≥ 0`, `M(ζ)z + q ≥ 0` and `|z_i (M(ζ)z + q)_i|` over
/// `points` seeded uniform box samples plus all vertices for `k ≤ 10`.
pub fn sampled_violation_m(inst: &UncertainLcpM, sol: &AffineSolutionM, points: usize, seed: u64) -> f64 {
    let k = inst.k();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut check = |zeta: &[f64]| {
        let z = sol.eval(zeta);
        let mut w = inst.matrix_at(zeta).mul_vec(&z);
        for (wi, qi) in w.iter_mut().zip(&inst.q) {
            *wi += qi;
        }
        for (zi, wi) in z.iter().zip(&w) {
            worst = worst.max(-zi).max(-wi).max((zi * wi).abs());
        }
    };
    if k <= 10 {
        for mask in 0u32..(1u32 << k) {
            let zeta: Vec<f64> = (0..k).map(|j| if mask >> j & 1 == 1 { 1.0 } else { -1.0 }).collect();
            check(&zeta);
        }
    }
    for _ in 0..points {
        let zeta: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        check(&zeta);
    }
    worst
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnumerationM {
    pub solutions: Vec<AffineSolutionM>,
    /// Subsets whose nominal block `M⁰_J` is singular; the closed form does not apply and
    /// they were not searched.
    pub unavailable: Vec<IndexSet>,
    /// False when some quadratic box check fell back to sampling.
    pub exact: bool,
}

impl EnumerationM {
    /// Whether an empty result proves that no AAR solution with invertible support block exists
    /// and no subset was skipped.
    pub fn is_complete(&self) -> bool {
        self.exact && self.unavailable.is_empty()
    }
}

/// Visits every `J ⊆ [n]` by cardinality then lexicographically and keeps the closed-form
/// candidates that have `r_J ≥ tol_support`, zero here-and-now rows, the kernel
/// condition and both box conditions; each is re-checked at sampled box points.
pub fn solve_enumeration_m(inst: &UncertainLcpM) -> Result<EnumerationM> {
    let n = inst.dim();
    if n - inst.h > ENUMERATION_MAX_FREE {
        return Err(Error::SizeLimit {
            what: "adjustable variables",
            actual: n - inst.h,
            limit: ENUMERATION_MAX_FREE,
        });
    }
    if n > ENUMERATION_MAX_DIM {
        return Err(Error::SizeLimit {
            what: "variables",
            actual: n,
            limit: ENUMERATION_MAX_DIM,
        });
    }
    let tol = inst.verification_tol();
    let mut out = EnumerationM {
        solutions: Vec::new(),
        unavailable: Vec::new(),
        exact: true,
    };
    for j in subsets_by_cardinality(&IndexSet::full(n)) {
        let Some(cand) = characterize_for_j(inst, &j)? else {
            out.unavailable.push(j);
            continue;
        };
        if j.iter().any(|&p| cand.r[p] < TOL_SUPPORT) {
            continue;
        }
        if (0..inst.h).any(|i| (0..inst.k()).any(|l| cand.d[(i, l)].abs() > tol)) {
            continue;
        }
        if !check_kernel_condition(inst, &j)? {
            continue;
        }
        let report = check_box_conditions(inst, &j, &cand)?;
        out.exact &= report.conditions.iter().all(|c| c.exact);
        if !report.overall {
            continue;
        }
        if sampled_violation_m(inst, &cand, RESAMPLE_POINTS, RESAMPLE_SEED) > tol {
            continue;
        }
        if !out
            .solutions
            .iter()
            .any(|s| s.distance(&cand) <= crate::aar_q::DEDUP_TOL)
        {
            out.solutions.push(cand);
        }
    }
    Ok(out)
}

/// `UniqueIfExists` when the symmetric part of `M⁰` is positive definite.
pub fn uniqueness_m(inst: &UncertainLcpM) -> Result<UniquenessVerdict> {
    if inst.dim() == 0 {
        return Ok(UniquenessVerdict::UniqueIfExists);
    }
    let lam = min_symmetric_eigenvalue(&inst.m0.symmetric_part())?;
    Ok(if lam > PSD_TOL {
        UniquenessVerdict::UniqueIfExists
    } else {
        UniquenessVerdict::Unknown
    })
}
