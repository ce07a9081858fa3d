//! Reference computations for the integration tests, written against plain nested
//! vectors so they share no code with the library.

#![allow(dead_code)]

use aarlcp::aar_m::{AffineSolutionM, UncertainLcpM};
use aarlcp::aar_q::{AffineSolutionQ, UncertainLcpQ};
use aarlcp::dense::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Dense = Vec<Vec<f64>>;

pub fn rows(m: &Matrix) -> Dense {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn mat(r: &[Vec<f64>]) -> Matrix {
    Matrix::from_rows(r).unwrap()
}

/// Gaussian elimination with partial pivoting; `None` when a pivot falls below `1e-12`.
pub fn gauss_solve(a: &Dense, b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Dense = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| row.iter().copied().chain([bi]).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))?;
        if m[piv][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..=n {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

pub fn det(a: &Dense) -> f64 {
    let n = a.len();
    let mut m = a.clone();
    let mut d = 1.0;
    for col in 0..n {
        let Some(piv) = (col..n).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs())) else {
            return 1.0;
        };
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(col, piv);
            d = -d;
        }
        d *= m[col][col];
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    d
}

pub fn principal(a: &Dense, idx: &[usize]) -> Dense {
    idx.iter().map(|&i| idx.iter().map(|&j| a[i][j]).collect()).collect()
}

/// All solutions of LCP(q, M) found by trying every complementary basis.
pub fn brute_force_lcp(m: &Dense, q: &[f64], tol: f64) -> Vec<Vec<f64>> {
    let n = q.len();
    let mut found: Vec<Vec<f64>> = Vec::new();
    for mask in 0u32..(1 << n) {
        let alpha: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let rhs: Vec<f64> = alpha.iter().map(|&i| -q[i]).collect();
        let Some(za) = gauss_solve(&principal(m, &alpha), &rhs) else {
            continue;
        };
        let mut z = vec![0.0; n];
        for (p, &i) in alpha.iter().enumerate() {
            z[i] = za[p];
        }
        let w: Vec<f64> = (0..n)
            .map(|i| q[i] + (0..n).map(|j| m[i][j] * z[j]).sum::<f64>())
            .collect();
        if z.iter().all(|&v| v >= -tol) && w.iter().all(|&v| v >= -tol) {
            if !found
                .iter()
                .any(|f| f.iter().zip(&z).all(|(a, b)| (a - b).abs() <= tol))
            {
                found.push(z);
            }
        }
    }
    found
}

/// Worst violation of `z ≥ 0`, `w ≥ 0`, `z_i w_i = 0` at a given `(z, w)`.
fn lcp_violation(z: &[f64], w: &[f64]) -> f64 {
    z.iter()
        .zip(w)
        .map(|(&zi, &wi)| (-zi).max(-wi).max((zi * wi).abs()))
        .fold(0.0, f64::max)
}

/// Worst LCP violation of `z(u) = Du + r` on `q̄ + u` at every vertex of the box (when at
/// most 12 rows are uncertain) and at `samples` seeded uniform points.
pub fn sampled_violation_q(inst: &UncertainLcpQ, sol: &AffineSolutionQ, samples: usize, seed: u64) -> f64 {
    let n = inst.dim();
    let m = rows(inst.m());
    let d = rows(&sol.d);
    let ubar = inst.ubar();
    let eval = |u: &[f64]| {
        let z: Vec<f64> = (0..n)
            .map(|i| sol.r[i] + (0..n).map(|j| d[i][j] * u[j]).sum::<f64>())
            .collect();
        let w: Vec<f64> = (0..n)
            .map(|i| inst.qbar()[i] + u[i] + (0..n).map(|j| m[i][j] * z[j]).sum::<f64>())
            .collect();
        lcp_violation(&z, &w)
    };
    let unc: Vec<usize> = (0..n).filter(|&i| ubar[i] > 0.0).collect();
    let mut worst = 0.0f64;
    let mut u = vec![0.0; n];
    if unc.len() <= 12 {
        for mask in 0u32..(1 << unc.len()) {
            for (b, &j) in unc.iter().enumerate() {
                u[j] = if mask >> b & 1 == 1 { ubar[j] } else { -ubar[j] };
            }
            worst = worst.max(eval(&u));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        for &j in &unc {
            u[j] = rng.gen_range(-ubar[j]..=ubar[j]);
        }
        worst = worst.max(eval(&u));
    }
    worst
}

/// Same for uncertain `M(ζ) = M⁰ + Σ ζ_l Mˡ` with `z(ζ) = Dζ + r` over `[−1, 1]ᵏ`.
pub fn sampled_violation_m(inst: &UncertainLcpM, sol: &AffineSolutionM, samples: usize, seed: u64) -> f64 {
    let n = inst.dim();
    let k = inst.k();
    let m0 = rows(inst.m0());
    let perts: Vec<Dense> = inst.perturbations().iter().map(rows).collect();
    let d = rows(&sol.d);
    let eval = |zeta: &[f64]| {
        let z: Vec<f64> = (0..n)
            .map(|i| sol.r[i] + (0..k).map(|l| d[i][l] * zeta[l]).sum::<f64>())
            .collect();
        let w: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = inst.q()[i];
                for j in 0..n {
                    let mij = m0[i][j] + (0..k).map(|l| zeta[l] * perts[l][i][j]).sum::<f64>();
                    s += mij * z[j];
                }
                s
            })
            .collect();
        lcp_violation(&z, &w)
    };
    let mut worst = 0.0f64;
    if k <= 12 {
        for mask in 0u32..(1 << k) {
            let v: Vec<f64> = (0..k).map(|l| if mask >> l & 1 == 1 { 1.0 } else { -1.0 }).collect();
            worst = worst.max(eval(&v));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let v: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        worst = worst.max(eval(&v));
    }
    worst
}

/// Minimum of `ζᵀQζ + bᵀζ + c` on a uniform grid with `steps + 1` points per axis.
pub fn grid_min_quadratic(q: &Dense, b: &[f64], c: f64, steps: usize) -> f64 {
    let k = b.len();
    let total = (steps + 1).pow(k as u32);
    let mut best = f64::INFINITY;
    let mut z = vec![0.0; k];
    for code in 0..total {
        let mut t = code;
        for zj in z.iter_mut() {
            *zj = -1.0 + 2.0 * (t % (steps + 1)) as f64 / steps as f64;
            t /= steps + 1;
        }
        let mut v = c;
        for i in 0..k {
            v += b[i] * z[i];
            for j in 0..k {
                v += z[i] * q[i][j] * z[j];
            }
        }
        best = best.min(v);
    }
    best
}

pub fn example_one() -> UncertainLcpQ {
    UncertainLcpQ::new(
        mat(&[vec![4.0, 10.0], vec![1.0, 2.0]]),
        vec![-100.0, -22.0],
        vec![1.0, 1.0],
        0,
    )
    .unwrap()
}

pub fn no_solution_example() -> UncertainLcpQ {
    UncertainLcpQ::new(
        mat(&[vec![1.0, 0.5], vec![0.5, 1.0]]),
        vec![-5.0, -3.0],
        vec![1.0, 1.0],
        0,
    )
    .unwrap()
}

pub fn uncertain_m_example() -> UncertainLcpM {
    let m0 = mat(&[vec![4.0, 1.0], vec![0.0, 4.0]]);
    let m1 = mat(&[vec![0.0, 1.0], vec![0.0, 0.0]]);
    UncertainLcpM::new(m0, vec![m1], vec![-8.0, -16.0], 0).unwrap()
}

/// The two rules stated for the first example.
pub fn example_one_stated() -> [(Dense, Vec<f64>); 2] {
    [
        (vec![vec![-0.25, 0.0], vec![0.0, 0.0]], vec![25.0, 0.0]),
        (vec![vec![0.0, 0.0], vec![0.0, -0.5]], vec![0.0, 11.0]),
    ]
}

pub fn max_entry_diff(a: &Dense, b: &Dense) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn max_vec_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
