//! Seeded random instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aar_m::UncertainLcpM;
use crate::aar_q::UncertainLcpQ;
use crate::dense::{IndexSet, Matrix};
use crate::error::{invalid, Error, Result};
use crate::market::MarketModel;

use super::format::Instance;

pub const MAX_GENERATED_DIM: usize = 50;
/// Diagonal shift of the PSD regime.
pub const PSD_SHIFT: f64 = 0.125;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// Integer entries in [−5, 5].
    General,
    /// `GᵀG + εI`.
    Psd,
    /// Strictly diagonally dominant with positive diagonal.
    PMatrix,
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(Regime::General),
            "psd" => Ok(Regime::Psd),
            "pmatrix" => Ok(Regime::PMatrix),
            _ => Err(invalid(format!(
                "unknown regime `{s}`; expected general, psd or pmatrix"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenKind {
    UncertainQ,
    UncertainM,
    Market,
}

impl std::str::FromStr for GenKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "q" | "uncertain-q" => Ok(GenKind::UncertainQ),
            "m" | "uncertain-m" => Ok(GenKind::UncertainM),
            "market" => Ok(GenKind::Market),
            _ => Err(invalid(format!("unknown instance kind `{s}`"))),
        }
    }
}

fn int_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, bound: i32) -> Matrix {
    let data = (0..rows * cols)
        .map(|_| f64::from(rng.gen_range(-bound..=bound)))
        .collect();
    Matrix::from_row_major(rows, cols, data).expect("finite")
}

fn int_vector(rng: &mut ChaCha8Rng, len: usize, bound: i32) -> Vec<f64> {
    (0..len).map(|_| f64::from(rng.gen_range(-bound..=bound))).collect()
}

/// Square matrix of the requested regime.
pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, regime: Regime) -> Matrix {
    match regime {
        Regime::General => int_matrix(rng, n, n, 5),
        Regime::Psd => {
            let g = int_matrix(rng, n, n, 3);
            g.transpose().matmul(&g).add(&Matrix::identity(n).scale(PSD_SHIFT))
        }
        Regime::PMatrix => {
            let mut m = int_matrix(rng, n, n, 3);
            for i in 0..n {
                let off: f64 = (0..n).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
                m[(i, i)] = off + f64::from(rng.gen_range(1..=3));
            }
            m
        }
    }
}

/// Reproducible instance: the same arguments give the same instance, and hence byte-identical
/// files. `k` is the number of perturbation matrices (uncertain-m) or demand rows (market);
/// for markets `n` counts producers and `h` the leading fixed producers. Every half-width is 1.
pub fn generate_random(kind: GenKind, n: usize, k: usize, h: usize, seed: u64, regime: Regime) -> Result<Instance> {
    if n == 0 || n > MAX_GENERATED_DIM {
        return Err(Error::InvalidArgument(format!(
            "n must be in 1..={MAX_GENERATED_DIM}, got {n}"
        )));
    }
    if h > n {
        return Err(invalid(format!("h = {h} exceeds n = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        GenKind::UncertainQ => {
            let m = random_matrix(&mut rng, n, regime);
            let qbar = int_vector(&mut rng, n, 10);
            Ok(Instance::UncertainQ(UncertainLcpQ::new(m, qbar, vec![1.0; n], h)?))
        }
        GenKind::UncertainM => {
            if k == 0 {
                return Err(invalid("uncertain-m instances need k ≥ 1"));
            }
            let m0 = random_matrix(&mut rng, n, regime);
            let perts = (0..k).map(|_| int_matrix(&mut rng, n, n, 2).scale(0.25)).collect();
            let q = int_vector(&mut rng, n, 10);
            Ok(Instance::UncertainM(UncertainLcpM::new(m0, perts, q, h)?))
        }
        GenKind::Market => {
            if k == 0 || k > MAX_GENERATED_DIM {
                return Err(invalid(format!(
                    "demand rows must be in 1..={MAX_GENERATED_DIM}, got {k}"
                )));
            }
            Ok(Instance::Market(random_market(&mut rng, n, k, h)?))
        }
    }
}

/// Market with one technology row and a negative semidefinite demand matrix.
pub fn random_market(rng: &mut ChaCha8Rng, producers: usize, demand: usize, fixed: usize) -> Result<MarketModel> {
    let c: Vec<f64> = (0..producers).map(|_| f64::from(rng.gen_range(1..=10))).collect();
    let a = Matrix::from_row_major(1, producers, vec![-1.0; producers])?;
    let b = vec![-f64::from(rng.gen_range(20..=40))];
    let mut bd = Matrix::zeros(demand, producers);
    for i in 0..demand {
        for j in 0..producers {
            bd[(i, j)] = f64::from(rng.gen_range(0..=1));
        }
        // every demand row is served by someone
        bd[(i, i % producers)] = 1.0;
    }
    let g = int_matrix(rng, demand, demand, 2);
    let dd = g.transpose().matmul(&g).scale(-0.5);
    let d: Vec<f64> = (0..demand).map(|_| f64::from(rng.gen_range(5..=15))).collect();
    let mut mm = MarketModel::new(c, a, b, bd, dd, d, vec![1.0; demand])?;
    mm.nonadjustable_producers = IndexSet::range(0, fixed);
    mm.validate()?;
    Ok(mm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{is_p_matrix, is_psd, PSD_TOL};
    use crate::io::format::serialize_instance;

    #[test]
    fn same_seed_same_bytes() {
        let a = serialize_instance(&generate_random(GenKind::UncertainQ, 3, 0, 0, 7, Regime::Psd).unwrap());
        let b = serialize_instance(&generate_random(GenKind::UncertainQ, 3, 0, 0, 7, Regime::Psd).unwrap());
        assert_eq!(a, b);
        let c = serialize_instance(&generate_random(GenKind::UncertainQ, 3, 0, 0, 8, Regime::Psd).unwrap());
        assert_ne!(a, c);
    }

    #[test]
    fn regimes_hold() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            assert!(is_psd(&random_matrix(&mut rng, 5, Regime::Psd), PSD_TOL).unwrap());
            assert!(is_p_matrix(&random_matrix(&mut rng, 5, Regime::PMatrix)).unwrap());
        }
    }

    #[test]
    fn size_checks() {
        assert!(generate_random(GenKind::UncertainQ, 0, 0, 0, 1, Regime::General).is_err());
        assert!(generate_random(GenKind::UncertainQ, 51, 0, 0, 1, Regime::General).is_err());
        assert!(generate_random(GenKind::UncertainQ, 3, 0, 4, 1, Regime::General).is_err());
        assert!(generate_random(GenKind::UncertainM, 3, 0, 0, 1, Regime::General).is_err());
        assert!(generate_random(GenKind::Market, 3, 2, 1, 1, Regime::General).is_ok());
    }
}
