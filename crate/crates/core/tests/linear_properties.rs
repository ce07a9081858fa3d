mod common;

use aarlcp::dense::{is_p_matrix, is_psd, lu_solve, IndexSet, Matrix, PSD_TOL};
use aarlcp::lcp::{solve_lemke, LemkeOutcome, NominalLcp};
use aarlcp::lp::{check_feasibility, solve_lp, LinearProgram, LpStatus, Sense};
use aarlcp::mip::{solve_mip_feasibility, MipStatus, MixedBinaryProgram};
use aarlcp::tol::TOL_COMP;
use common::*;
use proptest::prelude::*;

fn int_matrix(n: usize, lo: i32, hi: i32) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(lo..=hi, n * n)
        .prop_map(move |v| Matrix::from_row_major(n, n, v.into_iter().map(f64::from).collect()).unwrap())
}

fn sized_matrix(max_n: usize, lo: i32, hi: i32) -> impl Strategy<Value = Matrix> {
    (1..=max_n).prop_flat_map(move |n| int_matrix(n, lo, hi))
}

/// Strictly diagonally dominant with positive diagonal, hence a P-matrix.
fn p_matrix(max_n: usize) -> impl Strategy<Value = Matrix> {
    sized_matrix(max_n, -3, 3).prop_map(|mut m| {
        let n = m.rows();
        for i in 0..n {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
            m[(i, i)] = off + 1.0;
        }
        m
    })
}

fn psd_matrix(max_n: usize) -> impl Strategy<Value = Matrix> {
    // GᵀG with a rank-deficient G half the time, so PSD solution sets are not always singletons
    (sized_matrix(max_n, -2, 2), any::<bool>()).prop_map(|(g, deficient)| {
        let mut g = g;
        if deficient && g.rows() > 1 {
            for j in 0..g.cols() {
                g[(0, j)] = 0.0;
            }
        }
        g.transpose().matmul(&g)
    })
}

fn qvec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10i32..=10, n).prop_map(|v| v.into_iter().map(f64::from).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lu_recovers_solution(a in p_matrix(8), seed in any::<u64>()) {
        let n = a.rows();
        let x: Vec<f64> = (0..n).map(|i| ((seed >> (i % 60)) & 7) as f64 - 3.5).collect();
        let b = a.mul_vec(&x);
        let got = lu_solve(&a, &b).unwrap().unwrap();
        prop_assert!(max_vec_diff(&got, &x) <= 1e-10 * (1.0 + a.max_abs()));
    }

    #[test]
    fn submatrix_composes(a in int_matrix(6, -9, 9), rmask in 1u32..64, cmask in 1u32..64, r2 in 1u32..64, c2 in 1u32..64) {
        let pick = |mask: u32, n: usize| IndexSet::from_predicate(n, |i| mask >> i & 1 == 1);
        let (r, c) = (pick(rmask, 6), pick(cmask, 6));
        let (ri, ci) = (pick(r2, r.len()), pick(c2, c.len()));
        let inner = a.submatrix(&r, &c).unwrap().submatrix(&ri, &ci).unwrap();
        let direct = a.submatrix(&r.compose(&ri).unwrap(), &c.compose(&ci).unwrap()).unwrap();
        prop_assert_eq!(inner, direct);
    }

    #[test]
    fn psd_depends_on_symmetric_part(a in sized_matrix(6, -4, 4)) {
        prop_assert_eq!(is_psd(&a, PSD_TOL).unwrap(), is_psd(&a.symmetric_part(), PSD_TOL).unwrap());
    }

    #[test]
    fn psd_plus_skew_stays_psd(g in sized_matrix(5, -3, 3), s in sized_matrix(5, -3, 3)) {
        let n = g.rows().min(s.rows());
        let all = IndexSet::full(n);
        let g = g.principal(&all).unwrap();
        let s = s.principal(&all).unwrap();
        let skew = s.sub(&s.transpose());
        prop_assert!(is_psd(&g.transpose().matmul(&g).add(&skew), PSD_TOL).unwrap());
    }

    #[test]
    fn p_matrix_test_matches_minors(a in sized_matrix(5, -3, 4)) {
        let d = rows(&a);
        let n = d.len();
        let all_positive = (1u32..(1 << n)).all(|mask| {
            let idx: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
            det(&principal(&d, &idx)) > 1e-9
        });
        prop_assert_eq!(is_p_matrix(&a).unwrap(), all_positive);
    }
}

/// Random LP over `0 ≤ x ≤ 10` with `≥`, `≤` and `=` rows.
fn random_lp() -> impl Strategy<Value = (LinearProgram, Vec<usize>)> {
    (1usize..=5, 1usize..=5).prop_flat_map(|(nv, nr)| {
        (
            prop::collection::vec(-4i32..=4, nv * nr),
            prop::collection::vec(-8i32..=8, nr),
            prop::collection::vec(0u8..3, nr),
            prop::collection::vec(-5i32..=5, nv),
            Just((0..nr).collect::<Vec<usize>>()).prop_shuffle(),
        )
            .prop_map(move |(a, b, senses, c, perm)| {
                let mut lp = LinearProgram::new(nv);
                for j in 0..nv {
                    lp.set_bounds(j, 0.0, 10.0);
                }
                lp.set_objective(c.into_iter().map(f64::from).collect());
                for i in 0..nr {
                    let row: Vec<f64> = a[i * nv..(i + 1) * nv].iter().map(|&v| f64::from(v)).collect();
                    let sense = [Sense::Ge, Sense::Le, Sense::Eq][senses[i] as usize];
                    lp.add_dense_row(&row, sense, f64::from(b[i]));
                }
                (lp, perm)
            })
    })
}

fn permuted(lp: &LinearProgram, perm: &[usize]) -> LinearProgram {
    let mut out = LinearProgram::new(lp.num_vars());
    for j in 0..lp.num_vars() {
        out.set_bounds(j, lp.lower()[j], lp.upper()[j]);
    }
    out.set_objective(lp.objective().to_vec());
    for &i in perm {
        out.add_dense_row(lp.constraint_matrix().row(i), lp.senses()[i], lp.rhs()[i]);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn feasibility_ignores_row_order((lp, perm) in random_lp()) {
        let a = check_feasibility(&lp).unwrap();
        let b = check_feasibility(&permuted(&lp, &perm)).unwrap();
        prop_assert_eq!(a.status, b.status);
        if a.status == LpStatus::Optimal {
            prop_assert!(lp.max_violation(&a.x) <= 1e-7);
            prop_assert!(lp.max_violation(&b.x) <= 1e-7);
        }
    }

    /// With `d = c − Aᵀy`, the dual bound `bᵀy + Σ_j min(d_j l_j, d_j u_j)` is valid
    /// whenever y has the right signs, and it meets the primal optimum.
    #[test]
    fn optimal_basis_gives_dual_certificate((lp, _) in random_lp()) {
        let out = solve_lp(&lp).unwrap();
        prop_assume!(out.status == LpStatus::Optimal);
        let y = &out.duals;
        prop_assert_eq!(y.len(), lp.num_rows());
        let tol = 1e-7;
        for (i, s) in lp.senses().iter().enumerate() {
            match s {
                Sense::Ge => prop_assert!(y[i] >= -tol, "Ge row {} has y = {}", i, y[i]),
                Sense::Le => prop_assert!(y[i] <= tol, "Le row {} has y = {}", i, y[i]),
                Sense::Eq => {}
            }
        }
        let a = lp.constraint_matrix();
        let mut bound: f64 = lp.rhs().iter().zip(y).map(|(b, y)| b * y).sum();
        for j in 0..lp.num_vars() {
            let dj = lp.objective()[j] - (0..lp.num_rows()).map(|i| a[(i, j)] * y[i]).sum::<f64>();
            bound += (dj * lp.lower()[j]).min(dj * lp.upper()[j]);
        }
        let primal: f64 = lp.objective().iter().zip(&out.x).map(|(c, x)| c * x).sum();
        prop_assert!((primal - out.objective).abs() <= 1e-7);
        prop_assert!((bound - primal).abs() <= 1e-6 * (1.0 + primal.abs()), "dual {} primal {}", bound, primal);
    }
}

/// Feasibility problem in binaries `x` and continuous `y ∈ [0, 5]`.
fn random_mip() -> impl Strategy<Value = MixedBinaryProgram> {
    (1usize..=6, 0usize..=2, 1usize..=4).prop_flat_map(|(nb, nc, nr)| {
        let nv = nb + nc;
        (
            prop::collection::vec(-3i32..=3, nv * nr),
            prop::collection::vec(-4i32..=4, nr),
        )
            .prop_map(move |(a, b)| {
                let mut lp = LinearProgram::new(nv);
                for j in 0..nb {
                    lp.set_bounds(j, 0.0, 1.0);
                }
                for j in nb..nv {
                    lp.set_bounds(j, 0.0, 5.0);
                }
                for i in 0..nr {
                    let row: Vec<f64> = a[i * nv..(i + 1) * nv].iter().map(|&v| f64::from(v)).collect();
                    lp.add_dense_row(&row, Sense::Ge, f64::from(b[i]) + 0.5);
                }
                MixedBinaryProgram::new(lp, IndexSet::range(0, nb)).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn mip_matches_exhaustive_patterns(p in random_mip()) {
        let out = solve_mip_feasibility(&p, 10_000).unwrap();
        let nb = p.binaries().len();
        let any_pattern = (0u32..(1 << nb)).any(|mask| {
            let mut lp = p.lp().clone();
            for (bit, &j) in p.binaries().iter().enumerate() {
                lp.fix(j, f64::from(mask >> bit & 1));
            }
            check_feasibility(&lp).unwrap().status == LpStatus::Optimal
        });
        prop_assert_eq!(out.status == MipStatus::Feasible, any_pattern);
        if out.status == MipStatus::Feasible {
            prop_assert!(p.lp().max_violation(&out.assignment) <= 1e-7);
            for &j in p.binaries() {
                let v = out.assignment[j];
                prop_assert!(v == 0.0 || v == 1.0);
            }
        }
    }
}

fn lcp_residuals_ok(m: &Matrix, q: &[f64], z: &[f64]) -> bool {
    let w: Vec<f64> = (0..q.len())
        .map(|i| q[i] + (0..q.len()).map(|j| m[(i, j)] * z[j]).sum::<f64>())
        .collect();
    let scale =
        (1.0 + q.iter().fold(0.0f64, |a, v| a.max(v.abs()))) * (1.0 + z.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    z.iter().all(|&v| v >= -1e-9)
        && w.iter().all(|&v| v >= -1e-8 * scale)
        && z.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>().abs() <= TOL_COMP * scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn lemke_matches_brute_force_on_p_matrices(m in p_matrix(8), seed in any::<u64>()) {
        let n = m.rows();
        let q: Vec<f64> = (0..n).map(|i| ((seed >> (3 * (i % 20))) % 21) as f64 - 10.0).collect();
        let out = solve_lemke(&NominalLcp::new(m.clone(), q.clone()).unwrap()).unwrap();
        let LemkeOutcome::Solved(sol) = out else {
            return Err(TestCaseError::fail("P-matrix LCP ended on a ray"));
        };
        prop_assert!(lcp_residuals_ok(&m, &q, &sol.z));
        let brute = brute_force_lcp(&rows(&m), &q, 1e-9);
        prop_assert_eq!(brute.len(), 1);
        prop_assert!(max_vec_diff(&brute[0], &sol.z) <= 1e-8);
    }

    #[test]
    fn psd_solutions_are_cross_complementary(m in psd_matrix(6), q in qvec(6)) {
        let n = m.rows();
        let q = q[..n].to_vec();
        let mut found = brute_force_lcp(&rows(&m), &q, 1e-9);
        match solve_lemke(&NominalLcp::new(m.clone(), q.clone()).unwrap()).unwrap() {
            LemkeOutcome::Solved(sol) => {
                prop_assert!(lcp_residuals_ok(&m, &q, &sol.z));
                found.push(sol.z.clone());
            }
            // Lemke only stops on a ray for PSD M when the LCP is infeasible
            LemkeOutcome::Ray => prop_assert!(found.is_empty()),
        }
        for z1 in &found {
            for z2 in &found {
                let w2 = m.mul_vec(z2);
                let cross: f64 = (0..n).map(|i| z1[i] * (q[i] + w2[i])).sum();
                prop_assert!(cross.abs() <= 1e-8 * (1.0 + z1.iter().chain(z2).fold(0.0f64, |a, v| a.max(v.abs()))).powi(2));
            }
        }
    }
}
