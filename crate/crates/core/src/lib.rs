pub mod aar_m;
pub mod aar_q;
pub mod boxqp;
pub mod dense;
pub mod error;
pub mod io;
pub mod lcp;
pub mod lp;
pub mod market;
pub mod mip;
pub mod verification;

pub use error::{Error, ParseError, Result};

/// Numeric tolerances shared across the solvers.
pub mod tol {
    /// Primal feasibility and verification tolerance.
    pub const TOL_FEAS: f64 = crate::lp::TOL_FEAS;
    /// Entries above this count as strictly positive when deriving supports (K, J, P).
    pub const TOL_SUPPORT: f64 = 1e-7;
    /// Complementarity tolerance, scaled by `(1 + ‖q‖∞)(1 + ‖z‖∞)` where applied.
    pub const TOL_COMP: f64 = 1e-8;
}
