//! Global minimum of a (possibly indefinite) quadratic over the box `[−1, 1]ᵏ`.

use crate::dense::{LuFactors, Matrix};
use crate::error::{invalid, Result};

/// Largest dimension handled by exact face enumeration (3ᵏ faces).
pub const EXACT_MAX_DIM: usize = 10;
/// Quasi-random interior points used above [`EXACT_MAX_DIM`].
pub const SAMPLE_POINTS: usize = 100_000;
/// Vertices are enumerated in the sampled regime only up to this dimension.
const VERTEX_MAX_DIM: usize = 16;

/// `f(ζ) = ζᵀ Q ζ + bᵀ ζ + c`; only the symmetric part of `Q` matters.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxQuadratic {
    q: Matrix,
    b: Vec<f64>,
    c: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoxMinimum {
    pub value: f64,
    pub point: Vec<f64>,
    /// False when the value is the best of a sample rather than the global minimum.
    pub exact: bool,
}

impl BoxQuadratic {
    pub fn new(q: &Matrix, b: Vec<f64>, c: f64) -> Result<Self> {
        if !q.is_square() || q.rows() != b.len() {
            return Err(invalid("quadratic needs a k x k matrix and k linear coefficients"));
        }
        Ok(Self {
            q: q.symmetric_part(),
            b,
            c,
        })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        let qz = self.q.mul_vec(z);
        let quad: f64 = z.iter().zip(&qz).map(|(a, b)| a * b).sum();
        let lin: f64 = z.iter().zip(&self.b).map(|(a, b)| a * b).sum();
        quad + lin + self.c
    }

    /// Exact for `k ≤ EXACT_MAX_DIM`, sampled beyond.
    pub fn minimize(&self) -> BoxMinimum {
        if self.dim() <= EXACT_MAX_DIM {
            self.minimize_by_faces()
        } else {
            self.minimize_by_sampling(SAMPLE_POINTS)
        }
    }

    /// Visits every face of the box: coordinates are fixed at ±1 or left free, and on
    /// each face the stationary point of the restricted quadratic is kept if it lies in
    /// the face. Faces whose restricted Hessian is singular are skipped; a minimizer in
    /// the relative interior of such a face can be slid along a null direction to a
    /// smaller face without changing the value.
    pub fn minimize_by_faces(&self) -> BoxMinimum {
        let k = self.dim();
        let mut best = BoxMinimum {
            value: f64::INFINITY,
            point: vec![0.0; k],
            exact: true,
        };
        let total = 3usize.pow(k as u32);
        let mut state = vec![0u8; k];
        let mut point = vec![0.0; k];
        for code in 0..total {
            let mut c = code;
            for s in state.iter_mut() {
                *s = (c % 3) as u8;
                c /= 3;
            }
            let free: Vec<usize> = (0..k).filter(|&j| state[j] == 2).collect();
            for j in 0..k {
                point[j] = match state[j] {
                    0 => -1.0,
                    1 => 1.0,
                    _ => 0.0,
                };
            }
            if !free.is_empty() && !self.face_stationary_point(&free, &mut point) {
                continue;
            }
            let v = self.eval(&point);
            if v < best.value {
                best.value = v;
                best.point.clone_from(&point);
            }
        }
        best
    }

    /// Solves `2 Q_FF ζ_F = −(b_F + 2 Q_{F,X} ζ_X)` in place; false when singular or outside the face.
    fn face_stationary_point(&self, free: &[usize], point: &mut [f64]) -> bool {
        let f = free.len();
        let mut h = Matrix::zeros(f, f);
        let mut rhs = vec![0.0; f];
        for (a, &i) in free.iter().enumerate() {
            let mut g = self.b[i];
            for (j, &pj) in point.iter().enumerate() {
                if !free.contains(&j) {
                    g += 2.0 * self.q[(i, j)] * pj;
                }
            }
            rhs[a] = -g;
            for (bb, &j) in free.iter().enumerate() {
                h[(a, bb)] = 2.0 * self.q[(i, j)];
            }
        }
        let Ok(Some(lu)) = LuFactors::factor(&h) else {
            return false;
        };
        let sol = lu.solve(&rhs);
        if sol.iter().any(|v| !v.is_finite() || v.abs() > 1.0) {
            return false;
        }
        for (a, &i) in free.iter().enumerate() {
            point[i] = sol[a];
        }
        true
    }

    /// Vertices (up to dimension 16) plus `samples` Halton points.
    pub fn minimize_by_sampling(&self, samples: usize) -> BoxMinimum {
        let k = self.dim();
        let mut best = BoxMinimum {
            value: f64::INFINITY,
            point: vec![0.0; k],
            exact: false,
        };
        let consider = |p: &[f64], best: &mut BoxMinimum| {
            let v = self.eval(p);
            if v < best.value {
                best.value = v;
                best.point = p.to_vec();
            }
        };
        if k <= VERTEX_MAX_DIM {
            let mut p = vec![0.0; k];
            for mask in 0u64..(1u64 << k) {
                for (j, pj) in p.iter_mut().enumerate() {
                    *pj = if mask >> j & 1 == 1 { 1.0 } else { -1.0 };
                }
                consider(&p, &mut best);
            }
        }
        for p in halton_box(k, samples) {
            consider(&p, &mut best);
        }
        best
    }
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut c = 2u64;
    while primes.len() < count {
        if primes.iter().take_while(|&&p| p * p <= c).all(|&p| c % p != 0) {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// First `count` points of the Halton sequence mapped to `[−1, 1]ᵏ` (index 0 skipped).
pub fn halton_box(k: usize, count: usize) -> impl Iterator<Item = Vec<f64>> {
    let primes = first_primes(k);
    (1..=count as u64).map(move |i| primes.iter().map(|&p| 2.0 * radical_inverse(i, p) - 1.0).collect())
}
