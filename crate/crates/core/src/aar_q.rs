//! LCPs whose vector `q(u) = q̄ + u` varies over the box `|u| ≤ ū`, solved for affine
//! decision rules `z(u) = Du + r` that stay complementary for every `u`.
//!
//! Three solvers are provided: subset enumeration (full-dimensional boxes), a
//! big-M mixed-binary feasibility model (any box), and a single LP for PSD `M`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{invert, is_psd, norm_inf, subsets_by_cardinality, IndexSet, Matrix, PSD_TOL};
use crate::error::{invalid, Error, Result};
use crate::lcp::{compute_support_p, coordinate_range, describe_solution_set, solve_lemke, LemkeOutcome, NominalLcp};
use crate::lp::{check_feasibility, LinearProgram, LpStatus, Sense};
use crate::mip::{solve_mip_feasibility, MipStatus, MixedBinaryProgram, DEFAULT_NODE_LIMIT};
use crate::tol::{TOL_FEAS, TOL_SUPPORT};
use crate::verification::{box_min_affine, Condition, ConditionRecord, UniquenessVerdict, VerificationReport};

/// Largest number of adjustable variables `n − h` the subset enumeration accepts.
pub const ENUMERATION_MAX_FREE: usize = 20;
/// Solutions closer than this entrywise are reported once.
pub const DEDUP_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_DOUBLINGS: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct UncertainLcpQ {
    m: Matrix,
    qbar: Vec<f64>,
    ubar: Vec<f64>,
    h: usize,
}

impl UncertainLcpQ {
    pub fn new(m: Matrix, qbar: Vec<f64>, ubar: Vec<f64>, h: usize) -> Result<Self> {
        let n = qbar.len();
        if !m.is_square() || m.rows() != n || ubar.len() != n {
            return Err(invalid(format!(
                "M is {}x{}, q̄ has {} entries, ū has {}",
                m.rows(),
                m.cols(),
                n,
                ubar.len()
            )));
        }
        crate::dense::check_finite("q̄", &qbar)?;
        crate::dense::check_finite("ū", &ubar)?;
        if let Some(i) = ubar.iter().position(|&v| v < 0.0) {
            return Err(invalid(format!("ū[{i}] is negative")));
        }
        if h > n {
            return Err(invalid(format!("h = {h} exceeds n = {n}")));
        }
        Ok(Self { m, qbar, ubar, h })
    }

    pub fn dim(&self) -> usize {
        self.qbar.len()
    }

    pub fn m(&self) -> &Matrix {
        &self.m
    }

    pub fn qbar(&self) -> &[f64] {
        &self.qbar
    }

    pub fn ubar(&self) -> &[f64] {
        &self.ubar
    }

    pub fn h(&self) -> usize {
        self.h
    }

    /// `U`: coordinates with a nondegenerate uncertainty interval.
    pub fn uncertain_set(&self) -> IndexSet {
        IndexSet::from_predicate(self.dim(), |i| self.ubar[i] > 0.0)
    }

    /// `S`: coordinates of q that are certain.
    pub fn certain_set(&self) -> IndexSet {
        IndexSet::from_predicate(self.dim(), |i| self.ubar[i] == 0.0)
    }

    /// Indices `h..n` of the wait-and-see variables.
    pub fn adjustable_set(&self) -> IndexSet {
        IndexSet::range(self.h, self.dim())
    }

    pub fn nominal(&self) -> NominalLcp {
        NominalLcp::new(self.m.clone(), self.qbar.clone()).expect("dimensions checked")
    }

    /// Tolerance used by [`verify_affine_q`], scaled like the nominal slack bound.
    pub fn verification_tol(&self) -> f64 {
        TOL_FEAS * (1.0 + norm_inf(&self.qbar))
    }
}

/// Decision rule `z(u) = Du + r`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineSolutionQ {
    pub d: Matrix,
    pub r: Vec<f64>,
}

impl AffineSolutionQ {
    pub fn new(d: Matrix, r: Vec<f64>) -> Result<Self> {
        if !d.is_square() || d.rows() != r.len() {
            return Err(invalid("D must be n x n with n = len(r)"));
        }
        crate::dense::check_finite("r", &r)?;
        Ok(Self { d, r })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            d: Matrix::zeros(n, n),
            r: vec![0.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.r.len()
    }

    /// `K = {i : r_i > tol_support}`.
    pub fn support(&self) -> IndexSet {
        IndexSet::from_predicate(self.dim(), |i| self.r[i] > TOL_SUPPORT)
    }

    /// `N`, the complement of the support.
    pub fn zero_set(&self) -> IndexSet {
        self.support().complement(self.dim())
    }

    /// `J = K ∖ [h]`.
    pub fn adjustable_support(&self, h: usize) -> IndexSet {
        self.support().difference(&IndexSet::range(0, h))
    }

    /// `I = K ∩ [h]`.
    pub fn here_and_now_support(&self, h: usize) -> IndexSet {
        self.support().intersection(&IndexSet::range(0, h))
    }

    pub fn eval(&self, u: &[f64]) -> Vec<f64> {
        let mut z = self.d.mul_vec(u);
        for (zi, ri) in z.iter_mut().zip(&self.r) {
            *zi += ri;
        }
        z
    }

    /// Sets `r_i ≤ tol_support` to zero together with row i of D.
    pub fn snap_support(&mut self) {
        let n = self.dim();
        for i in 0..n {
            if self.r[i] <= TOL_SUPPORT {
                self.r[i] = 0.0;
                for j in 0..n {
                    self.d[(i, j)] = 0.0;
                }
            }
        }
    }

    /// Largest entrywise difference in `D` and `r`.
    pub fn distance(&self, other: &AffineSolutionQ) -> f64 {
        self.d
            .max_abs_diff(&other.d)
            .max(crate::dense::max_abs_diff(&self.r, &other.r))
    }
}

fn check_structure(inst: &UncertainLcpQ, sol: &AffineSolutionQ, tol: f64) -> Result<()> {
    let n = inst.dim();
    if sol.dim() != n {
        return Err(invalid(format!(
            "solution has dimension {}, instance has {n}",
            sol.dim()
        )));
    }
    for i in 0..inst.h {
        if let Some(j) = (0..n).find(|&j| sol.d[(i, j)].abs() > tol) {
            return Err(invalid(format!("here-and-now row {i} of D is nonzero (column {j})")));
        }
    }
    for j in &inst.certain_set() {
        if let Some(i) = (0..n).find(|&i| sol.d[(i, *j)].abs() > tol) {
            return Err(invalid(format!("D has a nonzero entry ({i}, {j}) in a certain column")));
        }
    }
    if let Some(i) = sol.r.iter().position(|&v| v < -tol) {
        return Err(invalid(format!("r[{i}] = {} is negative", sol.r[i])));
    }
    Ok(())
}

/// Coefficients of the slack `(Mz(u) + q̄ + u)_i = Σ_j g_ij u_j + c_i`, i.e. `G = MD + I`, `c = Mr + q̄`.
fn slack_form(inst: &UncertainLcpQ, sol: &AffineSolutionQ) -> (Matrix, Vec<f64>) {
    let mut g = inst.m.matmul(&sol.d);
    for i in 0..inst.dim() {
        g[(i, i)] += 1.0;
    }
    let mut c = inst.m.mul_vec(&sol.r);
    for (ci, qi) in c.iter_mut().zip(&inst.qbar) {
        *ci += qi;
    }
    (g, c)
}

/// Worst row of an identity check over the uncertain columns: largest of the constant and the
/// U-coefficients, with the box vertex where the affine form is largest in magnitude.
fn identity_record(
    condition: Condition,
    rows: &IndexSet,
    coef: impl Fn(usize, usize) -> f64,
    constant: impl Fn(usize) -> f64,
    ubar: &[f64],
    uncertain: &IndexSet,
    tol: f64,
) -> ConditionRecord {
    let n = ubar.len();
    let mut worst = (0.0, None, Vec::new());
    for &i in rows {
        let c = constant(i);
        let mut size = c.abs();
        let mut u = vec![0.0; n];
        for &j in uncertain {
            let a = coef(i, j);
            size = size.max(a.abs());
            let side = if c >= 0.0 { 1.0 } else { -1.0 };
            u[j] = side * if a >= 0.0 { ubar[j] } else { -ubar[j] };
        }
        if worst.1.is_none() || size > worst.0 {
            worst = (size, Some(i), u);
        }
    }
    ConditionRecord::new(condition, worst.0, tol, worst.1, worst.2)
}

/// Box-minimum check of row-wise affine forms `Σ_{j∈U} coef(i,j) u_j + constant(i) ≥ 0`.
fn box_min_record(
    condition: Condition,
    rows: &IndexSet,
    coef: impl Fn(usize, usize) -> f64,
    constant: impl Fn(usize) -> f64,
    ubar: &[f64],
    tol: f64,
) -> ConditionRecord {
    let n = ubar.len();
    let mut worst: (f64, Option<usize>, Vec<f64>) = (f64::INFINITY, None, Vec::new());
    for &i in rows {
        let a: Vec<f64> = (0..n).map(|j| coef(i, j)).collect();
        let (v, u) = box_min_affine(&a, constant(i), ubar);
        if v < worst.0 {
            worst = (v, Some(i), u);
        }
    }
    let residual = if worst.1.is_some() { (-worst.0).max(0.0) } else { 0.0 };
    ConditionRecord::new(condition, residual, tol, worst.1, worst.2)
}

/// Checks that `z(u) = Du + r` is complementary for every `u` in the box.
///
/// Each condition is evaluated exactly: affine forms are minimized over the box
/// analytically and the identity on the support rows is checked coefficient by
/// coefficient. The tolerance is [`UncertainLcpQ::verification_tol`].
pub fn verify_affine_q(inst: &UncertainLcpQ, sol: &AffineSolutionQ) -> Result<VerificationReport> {
    verify_affine_q_with_tol(inst, sol, inst.verification_tol())
}

pub fn verify_affine_q_with_tol(inst: &UncertainLcpQ, sol: &AffineSolutionQ, tol: f64) -> Result<VerificationReport> {
    check_structure(inst, sol, tol)?;
    let n = inst.dim();
    let k = sol.support();
    let nset = k.complement(n);
    let uset = inst.uncertain_set();
    let ubar = &inst.ubar;
    let (g, c) = slack_form(inst, sol);

    let mut records = Vec::with_capacity(4);
    records.push(box_min_record(
        Condition::Nonnegativity,
        &IndexSet::full(n),
        |i, j| sol.d[(i, j)],
        |i| sol.r[i],
        ubar,
        tol,
    ));
    records.push(identity_record(
        Condition::SupportSlackIdentity,
        &k,
        |i, j| g[(i, j)],
        |i| c[i],
        ubar,
        &uset,
        tol,
    ));
    records.push(identity_record(
        Condition::OffSupportZero,
        &nset,
        |i, j| sol.d[(i, j)],
        |i| sol.r[i],
        ubar,
        &uset,
        tol,
    ));
    records.push(box_min_record(
        Condition::OffSupportSlack,
        &nset,
        |i, j| g[(i, j)],
        |i| c[i],
        ubar,
        tol,
    ));
    Ok(VerificationReport::from_records(records))
}

/// Largest violation of `z ≥ 0`, `w = Mz + q̄ + u ≥ 0` and `|z_i w_i|` at `points`
/// seeded uniform box samples, plus every vertex when at most 10 coordinates are uncertain.
pub fn sampled_violation_q(inst: &UncertainLcpQ, sol: &AffineSolutionQ, points: usize, seed: u64) -> f64 {
    let n = inst.dim();
    let uset = inst.uncertain_set();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut check = |u: &[f64]| {
        let z = sol.eval(u);
        let w = inst.m.mul_vec(&z);
        for i in 0..n {
            let wi = w[i] + inst.qbar[i] + u[i];
            worst = worst.max(-z[i]).max(-wi).max((z[i] * wi).abs());
        }
    };
    let mut u = vec![0.0; n];
    if uset.len() <= 10 {
        for mask in 0u32..(1u32 << uset.len()) {
            for (b, &j) in uset.iter().enumerate() {
                u[j] = if mask >> b & 1 == 1 {
                    inst.ubar[j]
                } else {
                    -inst.ubar[j]
                };
            }
            check(&u);
        }
    }
    for _ in 0..points {
        for &j in &uset {
            u[j] = rng.gen_range(-inst.ubar[j]..=inst.ubar[j]);
        }
        check(&u);
    }
    worst
}

/// Largest residual of the block equations characterizing the support rows:
/// `M_{K∩S,J} D_{J,U} = 0`, `M_{K∩U,J} D_{J,K∩U} = −I`, `M_{K∩U,J} D_{J,N∩U} = 0`, `M_K r_K = −q̄_K`.
pub fn char_system_residual(inst: &UncertainLcpQ, sol: &AffineSolutionQ) -> Result<f64> {
    check_structure(inst, sol, inst.verification_tol())?;
    let k = sol.support();
    let j = sol.adjustable_support(inst.h);
    let uset = inst.uncertain_set();
    let mut worst = 0.0f64;
    // (M_{K,J} D_{J,U})_{i,l} + δ_il on U rows; the S rows have no identity term
    for &i in &k {
        for &l in &uset {
            let mut v: f64 = j.iter().map(|&p| inst.m[(i, p)] * sol.d[(p, l)]).sum();
            if i == l {
                v += 1.0;
            }
            worst = worst.max(v.abs());
        }
        let v: f64 = k.iter().map(|&p| inst.m[(i, p)] * sol.r[p]).sum::<f64>() + inst.qbar[i];
        worst = worst.max(v.abs());
    }
    Ok(worst)
}

/// Whether the characterizing block equations hold within the verification tolerance.
pub fn check_char_system(inst: &UncertainLcpQ, sol: &AffineSolutionQ) -> Result<bool> {
    Ok(char_system_residual(inst, sol)? <= inst.verification_tol())
}

fn push_unique(found: &mut Vec<AffineSolutionQ>, sol: AffineSolutionQ) {
    if !found.iter().any(|s| s.distance(&sol) <= DEDUP_TOL) {
        found.push(sol);
    }
}

/// All AAR solutions for a full-dimensional box, one candidate per adjustable subset J.
///
/// For each `J ⊆ {h, …, n−1}` with `M_J` invertible the candidate is
/// `D_{J,J} = −M_J⁻¹`, `r_J = −M_J⁻¹ q̄_J`; it is kept when its worst-case entries
/// `r_J − |M_J⁻¹| ū_J` and the worst-case off-support slacks are nonnegative.
/// Subsets are visited by cardinality, then lexicographically.
pub fn solve_enumeration(inst: &UncertainLcpQ) -> Result<Vec<AffineSolutionQ>> {
    if !inst.certain_set().is_empty() {
        return Err(Error::Precondition(
            "subset enumeration needs every ū_i > 0; use the mixed-binary solver".into(),
        ));
    }
    let free = inst.adjustable_set();
    if free.len() > ENUMERATION_MAX_FREE {
        return Err(Error::SizeLimit {
            what: "adjustable variables",
            actual: free.len(),
            limit: ENUMERATION_MAX_FREE,
        });
    }
    let tol = inst.verification_tol();
    let mut found = Vec::new();
    for j in subsets_by_cardinality(&free) {
        let Some(sol) = candidate_for_subset(inst, &j, tol)? else {
            continue;
        };
        if verify_affine_q(inst, &sol)?.overall {
            push_unique(&mut found, sol);
        }
    }
    Ok(found)
}

/// The closed-form candidate for subset `J`, or `None` when `M_J` is singular or the
/// worst-case conditions fail.
fn candidate_for_subset(inst: &UncertainLcpQ, j: &IndexSet, tol: f64) -> Result<Option<AffineSolutionQ>> {
    let n = inst.dim();
    let ubar = &inst.ubar;
    let mut sol = AffineSolutionQ::zero(n);
    if j.is_empty() {
        // z ≡ 0 needs q̄ − ū ≥ 0
        let ok = (0..n).all(|i| inst.qbar[i] - ubar[i] >= -tol);
        return Ok(ok.then_some(sol));
    }
    let Some(inv) = invert(&inst.m.principal(j)?)? else {
        return Ok(None);
    };
    let qj = j.gather(&inst.qbar);
    let uj = j.gather(ubar);
    let rj: Vec<f64> = inv.mul_vec(&qj).iter().map(|v| -v).collect();
    for a in 0..j.len() {
        let spread: f64 = (0..j.len()).map(|b| (inv[(a, b)] * uj[b]).abs()).sum();
        if rj[a] - spread < -tol {
            return Ok(None);
        }
    }
    for i in 0..n {
        if j.contains(i) {
            continue;
        }
        // G = M_{i,J} M_J⁻¹
        let mij: Vec<f64> = j.iter().map(|&p| inst.m[(i, p)]).collect();
        let g: Vec<f64> = (0..j.len())
            .map(|b| (0..j.len()).map(|a| mij[a] * inv[(a, b)]).sum())
            .collect();
        let spread: f64 = g.iter().zip(&uj).map(|(gb, ub)| (gb * ub).abs()).sum();
        let gq: f64 = g.iter().zip(&qj).map(|(gb, qb)| gb * qb).sum();
        if -spread - ubar[i] - gq + inst.qbar[i] < -tol {
            return Ok(None);
        }
    }
    for (a, &p) in j.iter().enumerate() {
        sol.r[p] = rj[a];
        for (b, &l) in j.iter().enumerate() {
            sol.d[(p, l)] = -inv[(a, b)];
        }
    }
    Ok(Some(sol))
}

/// Flat variable positions of the mixed-binary model: `x` (n binaries), `r` (n), then
/// `A`, `C`, `D` (n × n each, row-major).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MipLayout {
    n: usize,
}

impl MipLayout {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn num_vars(&self) -> usize {
        2 * self.n + 3 * self.n * self.n
    }

    pub fn x(&self, i: usize) -> usize {
        i
    }

    pub fn r(&self, i: usize) -> usize {
        self.n + i
    }

    pub fn a(&self, i: usize, j: usize) -> usize {
        2 * self.n + i * self.n + j
    }

    pub fn c(&self, i: usize, j: usize) -> usize {
        2 * self.n + self.n * self.n + i * self.n + j
    }

    pub fn d(&self, i: usize, j: usize) -> usize {
        2 * self.n + 2 * self.n * self.n + i * self.n + j
    }

    /// Reads `(D, r)` out of a full assignment.
    pub fn extract(&self, v: &[f64]) -> AffineSolutionQ {
        let n = self.n;
        let mut sol = AffineSolutionQ::zero(n);
        for i in 0..n {
            sol.r[i] = v[self.r(i)];
            for j in 0..n {
                sol.d[(i, j)] = v[self.d(i, j)];
            }
        }
        sol
    }
}

/// Terms of `B·x_i + Σ_l M_il D_lj` style rows: `Σ_l M_il · var(l)` plus extra terms.
fn m_row_terms(m: &Matrix, i: usize, var: impl Fn(usize) -> usize) -> Vec<(usize, f64)> {
    (0..m.cols())
        .filter(|&l| m[(i, l)] != 0.0)
        .map(|l| (var(l), m[(i, l)]))
        .collect()
}

/// The big-M mixed-binary feasibility model whose feasible points are AAR solutions.
///
/// `x_i = 1` marks `i` as a possible support index. `r ≥ 0` is a variable bound;
/// `D_{[h],·} = 0`, `D_{·,S} = 0` and the unused `A`, `C` columns are fixings; every other
/// constraint is a row, with two-sided constraints split into two rows. The slack bound
/// through `C` is imposed on every row i, not only on the off-support rows.
pub fn build_mip(inst: &UncertainLcpQ, big_m: f64) -> Result<(MixedBinaryProgram, MipLayout)> {
    if !(big_m > 0.0 && big_m.is_finite()) {
        return Err(invalid(format!("big-M must be positive and finite, got {big_m}")));
    }
    let n = inst.dim();
    let lay = MipLayout::new(n);
    let m = &inst.m;
    let q = &inst.qbar;
    let ubar = &inst.ubar;
    let uset = inst.uncertain_set();
    let sset = inst.certain_set();
    let b = big_m;

    let mut lp = LinearProgram::new(lay.num_vars());
    for i in 0..n {
        lp.set_bounds(lay.x(i), 0.0, 1.0);
        for j in 0..n {
            lp.free(lay.a(i, j));
            lp.free(lay.c(i, j));
            lp.free(lay.d(i, j));
            if i < inst.h || sset.contains(j) {
                lp.fix(lay.d(i, j), 0.0);
            }
            if sset.contains(j) {
                lp.fix(lay.a(i, j), 0.0);
                lp.fix(lay.c(i, j), 0.0);
            }
        }
    }

    for i in 0..n {
        // B x_i ≥ r_i
        lp.add_row(&[(lay.x(i), b), (lay.r(i), -1.0)], Sense::Ge, 0.0);
        // B(1 − x_i) ≥ M_i r + q̄_i ≥ 0
        let mut terms = m_row_terms(m, i, |l| lay.r(l));
        lp.add_row(&terms, Sense::Ge, -q[i]);
        terms.push((lay.x(i), b));
        lp.add_row(&terms, Sense::Le, b - q[i]);
    }
    // B(1 − x_i) ≥ M_i D_{·,j} + δ_ij ≥ −B(1 − x_i) for i ∈ S, j ∈ U and for i, j ∈ U
    for i in 0..n {
        for &j in &uset {
            let shift = if i == j { 1.0 } else { 0.0 };
            let mut terms = m_row_terms(m, i, |l| lay.d(l, j));
            terms.push((lay.x(i), b));
            lp.add_row(&terms, Sense::Le, b - shift);
            let last = terms.len() - 1;
            terms[last].1 = -b;
            lp.add_row(&terms, Sense::Ge, -b - shift);
        }
    }
    for i in 0..n {
        for &j in &uset {
            lp.add_row(&[(lay.a(i, j), 1.0), (lay.d(i, j), ubar[j])], Sense::Le, 0.0);
            lp.add_row(&[(lay.a(i, j), 1.0), (lay.d(i, j), -ubar[j])], Sense::Le, 0.0);
        }
        let mut terms: Vec<(usize, f64)> = uset.iter().map(|&j| (lay.a(i, j), 1.0)).collect();
        terms.push((lay.r(i), 1.0));
        lp.add_row(&terms, Sense::Ge, 0.0);
    }
    for i in 0..n {
        for &j in &uset {
            let delta = if i == j { ubar[j] } else { 0.0 };
            let md: Vec<(usize, f64)> = m_row_terms(m, i, |l| lay.d(l, j))
                .into_iter()
                .map(|(v, a)| (v, a * ubar[j]))
                .collect();
            // C_ij ≤ −(M_i D_{·,j} + δ_ij) ū_j
            let mut terms = vec![(lay.c(i, j), 1.0)];
            terms.extend(md.iter().copied());
            lp.add_row(&terms, Sense::Le, -delta);
            // C_ij ≤ (M_i D_{·,j} + δ_ij) ū_j
            let mut terms = vec![(lay.c(i, j), 1.0)];
            terms.extend(md.iter().map(|&(v, a)| (v, -a)));
            lp.add_row(&terms, Sense::Le, delta);
        }
        let mut terms: Vec<(usize, f64)> = uset.iter().map(|&j| (lay.c(i, j), 1.0)).collect();
        terms.extend(m_row_terms(m, i, |l| lay.r(l)));
        lp.add_row(&terms, Sense::Ge, -q[i]);
    }

    let binaries = IndexSet::range(0, n);
    Ok((MixedBinaryProgram::new(lp, binaries)?, lay))
}

/// `100 (1 + ‖q̄‖∞ + ‖ū‖∞)(1 + max |M_ij|)`.
pub fn default_big_m(inst: &UncertainLcpQ) -> f64 {
    100.0 * (1.0 + norm_inf(&inst.qbar) + norm_inf(&inst.ubar)) * (1.0 + inst.m.max_abs())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MipSettings {
    /// Initial big-M; [`default_big_m`] when `None`.
    pub big_m: Option<f64>,
    pub max_doublings: usize,
    pub node_limit: usize,
}

impl Default for MipSettings {
    fn default() -> Self {
        Self {
            big_m: None,
            max_doublings: DEFAULT_MAX_DOUBLINGS,
            node_limit: DEFAULT_NODE_LIMIT,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MipQOutcome {
    Solved {
        solution: AffineSolutionQ,
        big_m: f64,
        nodes: usize,
    },
    /// Nothing verified up to the largest big-M tried. Not a proof of nonexistence:
    /// `big_m_bounded` is set when the model was infeasible at that final big-M.
    NoSolution { big_m_bounded: bool, last_big_m: f64 },
}

impl MipQOutcome {
    pub fn solution(&self) -> Option<&AffineSolutionQ> {
        match self {
            MipQOutcome::Solved { solution, .. } => Some(solution),
            MipQOutcome::NoSolution { .. } => None,
        }
    }
}

/// Solves the mixed-binary model, doubling big-M after an infeasible model or a point
/// that fails verification. A node-limit hit is an error.
pub fn solve_mip_q(inst: &UncertainLcpQ, settings: &MipSettings) -> Result<MipQOutcome> {
    let mut big_m = settings.big_m.unwrap_or_else(|| default_big_m(inst));
    if !(big_m > 0.0 && big_m.is_finite()) {
        return Err(invalid(format!("big-M must be positive and finite, got {big_m}")));
    }
    let mut last_infeasible = false;
    let mut last_big_m = big_m;
    for round in 0..=settings.max_doublings {
        if round > 0 {
            big_m *= 2.0;
        }
        last_big_m = big_m;
        let (program, layout) = build_mip(inst, big_m)?;
        let out = solve_mip_feasibility(&program, settings.node_limit)?;
        match out.status {
            MipStatus::NodeLimit => return Err(Error::NodeLimit(settings.node_limit)),
            MipStatus::Infeasible => last_infeasible = true,
            MipStatus::Feasible => {
                let mut sol = layout.extract(&out.assignment);
                sol.snap_support();
                let passes = verify_affine_q(inst, &sol).map(|r| r.overall).unwrap_or(false);
                if passes {
                    return Ok(MipQOutcome::Solved {
                        solution: sol,
                        big_m,
                        nodes: out.nodes,
                    });
                }
                last_infeasible = false;
            }
        }
    }
    Ok(MipQOutcome::NoSolution {
        big_m_bounded: last_infeasible,
        last_big_m,
    })
}

/// Why the PSD pathway found no solution. Both cases are proofs of nonexistence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsdNoSolution {
    /// Lemke ended on a ray, so the nominal LCP has no solution.
    NominalInfeasible,
    /// The feasibility LP has no point.
    LpInfeasible,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PsdOutcome {
    Solved {
        solution: AffineSolutionQ,
        /// Indices positive in some nominal solution.
        support_p: IndexSet,
    },
    NoSolution {
        reason: PsdNoSolution,
        support_p: Option<IndexSet>,
    },
}

impl PsdOutcome {
    pub fn solution(&self) -> Option<&AffineSolutionQ> {
        match self {
            PsdOutcome::Solved { solution, .. } => Some(solution),
            PsdOutcome::NoSolution { .. } => None,
        }
    }
}

/// Builds the feasibility LP for PSD `M`. Variables use the [`MipLayout`] positions
/// with the `x` block fixed at zero and unused.
pub fn build_psd_lp(inst: &UncertainLcpQ, zbar: &[f64], p: &IndexSet) -> Result<(LinearProgram, MipLayout)> {
    let n = inst.dim();
    let lay = MipLayout::new(n);
    let m = &inst.m;
    let q = &inst.qbar;
    let ubar = &inst.ubar;
    let uset = inst.uncertain_set();
    let sset = inst.certain_set();
    let lset = p.complement(n);
    let msym = m.add(&m.transpose());

    let mut lp = LinearProgram::new(lay.num_vars());
    for i in 0..n {
        lp.fix(lay.x(i), 0.0);
        for j in 0..n {
            lp.free(lay.a(i, j));
            lp.free(lay.c(i, j));
            lp.free(lay.d(i, j));
            if i < inst.h || sset.contains(j) || lset.contains(i) {
                lp.fix(lay.d(i, j), 0.0);
            }
            if sset.contains(j) || lset.contains(i) {
                lp.fix(lay.a(i, j), 0.0);
            }
            if sset.contains(j) || p.contains(i) {
                lp.fix(lay.c(i, j), 0.0);
            }
        }
    }

    for i in 0..n {
        lp.add_row(&m_row_terms(m, i, |l| lay.r(l)), Sense::Ge, -q[i]);
    }
    let qz: f64 = q.iter().zip(zbar).map(|(a, b)| a * b).sum();
    let terms: Vec<(usize, f64)> = (0..n).filter(|&l| q[l] != 0.0).map(|l| (lay.r(l), q[l])).collect();
    lp.add_row(&terms, Sense::Eq, qz);
    let mz = msym.mul_vec(zbar);
    for i in 0..n {
        lp.add_row(&m_row_terms(&msym, i, |l| lay.r(l)), Sense::Eq, mz[i]);
    }
    for &i in p {
        for &j in &uset {
            let rhs = if i == j { -1.0 } else { 0.0 };
            let terms: Vec<(usize, f64)> = p
                .iter()
                .filter(|&&l| m[(i, l)] != 0.0)
                .map(|&l| (lay.d(l, j), m[(i, l)]))
                .collect();
            lp.add_row(&terms, Sense::Eq, rhs);
        }
    }
    for &i in p {
        for &j in &uset {
            lp.add_row(&[(lay.a(i, j), 1.0), (lay.d(i, j), ubar[j])], Sense::Le, 0.0);
            lp.add_row(&[(lay.a(i, j), 1.0), (lay.d(i, j), -ubar[j])], Sense::Le, 0.0);
        }
        let mut terms: Vec<(usize, f64)> = uset.iter().map(|&j| (lay.a(i, j), 1.0)).collect();
        terms.push((lay.r(i), 1.0));
        lp.add_row(&terms, Sense::Ge, 0.0);
    }
    for &i in &lset {
        for &j in &uset {
            let delta = if i == j { ubar[j] } else { 0.0 };
            let md: Vec<(usize, f64)> = m_row_terms(m, i, |l| lay.d(l, j))
                .into_iter()
                .map(|(v, a)| (v, a * ubar[j]))
                .collect();
            let mut terms = vec![(lay.c(i, j), 1.0)];
            terms.extend(md.iter().copied());
            lp.add_row(&terms, Sense::Le, -delta);
            let mut terms = vec![(lay.c(i, j), 1.0)];
            terms.extend(md.iter().map(|&(v, a)| (v, -a)));
            lp.add_row(&terms, Sense::Le, delta);
        }
        let mut terms: Vec<(usize, f64)> = uset.iter().map(|&j| (lay.c(i, j), 1.0)).collect();
        terms.extend(m_row_terms(m, i, |l| lay.r(l)));
        lp.add_row(&terms, Sense::Ge, -q[i]);
    }
    Ok((lp, lay))
}

/// Decides existence for PSD `M` with one nominal solve, n support LPs and one
/// feasibility LP. Both no-solution outcomes are exact.
pub fn solve_psd(inst: &UncertainLcpQ) -> Result<PsdOutcome> {
    if !is_psd(&inst.m, PSD_TOL)? {
        return Err(Error::Precondition("M is not positive semidefinite".into()));
    }
    let nominal = inst.nominal();
    let zbar = match solve_lemke(&nominal)? {
        LemkeOutcome::Solved(s) => s,
        LemkeOutcome::Ray => {
            return Ok(PsdOutcome::NoSolution {
                reason: PsdNoSolution::NominalInfeasible,
                support_p: None,
            })
        }
    };
    let p = compute_support_p(&nominal, &zbar)?;
    let (lp, layout) = build_psd_lp(inst, &zbar.z, &p)?;
    let out = check_feasibility(&lp)?;
    if out.status != LpStatus::Optimal {
        return Ok(PsdOutcome::NoSolution {
            reason: PsdNoSolution::LpInfeasible,
            support_p: Some(p),
        });
    }
    let mut sol = layout.extract(&out.x);
    sol.snap_support();
    let report = verify_affine_q(inst, &sol)?;
    if !report.overall {
        return Err(Error::Numerical(format!(
            "feasibility LP point failed verification (residual {:.3e})",
            report.max_residual()
        )));
    }
    Ok(PsdOutcome::Solved {
        solution: sol,
        support_p: p,
    })
}

/// For PSD `M` and a full-dimensional box, an AAR solution is unique if it exists, and
/// none exists when the nominal LCP has several solutions.
pub fn uniqueness_check_psd(inst: &UncertainLcpQ) -> Result<UniquenessVerdict> {
    if !inst.certain_set().is_empty() || !is_psd(&inst.m, PSD_TOL)? {
        return Ok(UniquenessVerdict::NotApplicable);
    }
    let nominal = inst.nominal();
    let zbar = match solve_lemke(&nominal)? {
        LemkeOutcome::Solved(s) => s,
        // no nominal solution, hence no AAR solution at all
        LemkeOutcome::Ray => return Ok(UniquenessVerdict::UniqueIfExists),
    };
    let set = describe_solution_set(&nominal, &zbar)?;
    for j in 0..inst.dim() {
        let (lo, hi) = coordinate_range(&set, j)?;
        match hi {
            None => return Ok(UniquenessVerdict::MultipleNominalNoAar),
            Some(hi) if hi - lo > TOL_SUPPORT => return Ok(UniquenessVerdict::MultipleNominalNoAar),
            _ => {}
        }
    }
    Ok(UniquenessVerdict::UniqueIfExists)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_one() -> UncertainLcpQ {
        let m = Matrix::from_rows(&[vec![4.0, 10.0], vec![1.0, 2.0]]).unwrap();
        UncertainLcpQ::new(m, vec![-100.0, -22.0], vec![1.0, 1.0], 0).unwrap()
    }

    fn no_solution_example() -> UncertainLcpQ {
        let m = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        UncertainLcpQ::new(m, vec![-5.0, -3.0], vec![1.0, 1.0], 0).unwrap()
    }

    fn sol(d: &[Vec<f64>], r: &[f64]) -> AffineSolutionQ {
        AffineSolutionQ::new(Matrix::from_rows(d).unwrap(), r.to_vec()).unwrap()
    }

    #[test]
    fn verifies_first_example_solution() {
        let s = sol(&[vec![-0.25, 0.0], vec![0.0, 0.0]], &[25.0, 0.0]);
        let rep = verify_affine_q(&example_one(), &s).unwrap();
        assert!(rep.overall, "{rep:?}");
    }

    #[test]
    fn constant_rule_fails_identity() {
        let s = sol(&[vec![0.0, 0.0], vec![0.0, 0.0]], &[25.0, 0.0]);
        let rep = verify_affine_q(&example_one(), &s).unwrap();
        assert!(!rep.overall);
        let rec = rep.record(Condition::SupportSlackIdentity).unwrap();
        assert!(!rec.passed);
        // at u = (1, 0): 4·25 − 100 + 1 = 1
        assert_eq!(rec.residual, 1.0);
    }

    #[test]
    fn zero_rule_when_qbar_covers_box() {
        let m = Matrix::from_rows(&[vec![3.0, -7.0], vec![2.0, 0.0]]).unwrap();
        let inst = UncertainLcpQ::new(m, vec![1.0, 1.0], vec![1.0, 1.0], 0).unwrap();
        assert!(verify_affine_q(&inst, &AffineSolutionQ::zero(2)).unwrap().overall);
    }

    #[test]
    fn structure_violation_is_an_error() {
        let mut inst = example_one();
        inst.h = 1;
        let s = sol(&[vec![-0.25, 0.0], vec![0.0, 0.0]], &[25.0, 0.0]);
        assert!(matches!(verify_affine_q(&inst, &s), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn characterization_system() {
        let inst = example_one();
        let s = sol(&[vec![-0.25, 0.0], vec![0.0, 0.0]], &[25.0, 0.0]);
        assert!(check_char_system(&inst, &s).unwrap());
        let s = sol(&[vec![-0.25, 0.0], vec![0.0, 0.0]], &[26.0, 0.0]);
        assert!(!check_char_system(&inst, &s).unwrap());
        assert!(check_char_system(&inst, &AffineSolutionQ::zero(2)).unwrap());
    }

    #[test]
    fn enumeration_finds_all_three_solutions() {
        let found = solve_enumeration(&example_one()).unwrap();
        assert_eq!(found.len(), 3);
        assert_eq!(found[0].r, vec![25.0, 0.0]);
        assert_eq!(found[0].d[(0, 0)], -0.25);
        assert_eq!(found[1].r, vec![0.0, 11.0]);
        assert_eq!(found[1].d[(1, 1)], -0.5);
        // J = {1, 2}: D = −M⁻¹, r = (10, 6)
        let expected = sol(&[vec![1.0, -5.0], vec![-0.5, 2.0]], &[10.0, 6.0]);
        assert!(found[2].distance(&expected) < 1e-12);
    }

    #[test]
    fn enumeration_empty_for_counterexample() {
        assert!(solve_enumeration(&no_solution_example()).unwrap().is_empty());
    }

    #[test]
    fn enumeration_requires_full_box() {
        let m = Matrix::identity(2);
        let inst = UncertainLcpQ::new(m, vec![1.0, 1.0], vec![1.0, 0.0], 0).unwrap();
        assert!(matches!(solve_enumeration(&inst), Err(Error::Precondition(_))));
    }

    #[test]
    fn mip_row_count_for_scalar_instance() {
        let inst = UncertainLcpQ::new(Matrix::identity(1), vec![-1.0], vec![1.0], 0).unwrap();
        let (p, lay) = build_mip(&inst, 10.0).unwrap();
        // r1: 1, r2: 2, D4: 2, A1–A2: 2, A3: 1, C1–C2: 2, C3: 1
        assert_eq!(p.lp().num_rows(), 11);
        assert_eq!(lay.num_vars(), 5);
    }

    #[test]
    fn mip_fixes_all_of_d_without_adjustable_variables() {
        let inst = example_one();
        let inst = UncertainLcpQ::new(inst.m.clone(), inst.qbar.clone(), inst.ubar.clone(), 2).unwrap();
        let (p, lay) = build_mip(&inst, 1e3).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(p.lp().lower()[lay.d(i, j)], 0.0);
                assert_eq!(p.lp().upper()[lay.d(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn mip_matches_first_example() {
        let inst = example_one();
        let settings = MipSettings {
            big_m: Some(1e3),
            ..MipSettings::default()
        };
        let out = solve_mip_q(&inst, &settings).unwrap();
        let s = out.solution().expect("solution");
        let found = solve_enumeration(&inst).unwrap();
        assert!(found.iter().any(|f| f.distance(s) < 1e-7), "{s:?}");
    }

    #[test]
    fn mip_no_solution_for_counterexample() {
        let settings = MipSettings {
            big_m: Some(1e3),
            max_doublings: 3,
            ..MipSettings::default()
        };
        let out = solve_mip_q(&no_solution_example(), &settings).unwrap();
        assert!(matches!(
            out,
            MipQOutcome::NoSolution {
                big_m_bounded: true,
                ..
            }
        ));
    }

    #[test]
    fn psd_identity_instance() {
        let inst = UncertainLcpQ::new(Matrix::identity(2), vec![-5.0, -3.0], vec![1.0, 1.0], 0).unwrap();
        let out = solve_psd(&inst).unwrap();
        let s = out.solution().unwrap();
        assert!(crate::dense::max_abs_diff(&s.r, &[5.0, 3.0]) < 1e-9);
        assert!(s.d.max_abs_diff(&Matrix::identity(2).scale(-1.0)) < 1e-9);
    }

    #[test]
    fn psd_counterexample_has_no_solution() {
        let out = solve_psd(&no_solution_example()).unwrap();
        assert!(matches!(
            out,
            PsdOutcome::NoSolution {
                reason: PsdNoSolution::LpInfeasible,
                ..
            }
        ));
        assert!(matches!(solve_psd(&example_one()), Err(Error::Precondition(_))));
    }

    #[test]
    fn uniqueness_verdicts() {
        assert_eq!(
            uniqueness_check_psd(&no_solution_example()).unwrap(),
            UniquenessVerdict::UniqueIfExists
        );
        let zero = UncertainLcpQ::new(Matrix::zeros(1, 1), vec![0.0], vec![1.0], 0).unwrap();
        assert_eq!(
            uniqueness_check_psd(&zero).unwrap(),
            UniquenessVerdict::MultipleNominalNoAar
        );
        assert_eq!(
            uniqueness_check_psd(&example_one()).unwrap(),
            UniquenessVerdict::NotApplicable
        );
    }
}
