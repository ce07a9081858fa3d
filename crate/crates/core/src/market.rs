//! Energy-market equilibrium as an LCP with uncertain price-insensitive demand.
//!
//! Producers solve `min cᵀx` subject to `Ax ≥ b` and `Bx ≥ D p + d`, where the demand
//! `D p + d` depends on prices p. Stacking the optimality conditions of the producers
//! with market clearing in the variables `(x, λ, p)` gives
//! `M = [[0, −Aᵀ, −Bᵀ], [A, 0, 0], [B, 0, −D]]` and `q = (c, −b, −d)`.

use std::ops::Range;

use crate::aar_q::UncertainLcpQ;
use crate::dense::{check_finite, IndexSet, Matrix};
use crate::error::{invalid, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct MarketModel {
    /// Production costs, one per producer.
    pub c: Vec<f64>,
    /// Technology matrix, m × n.
    pub a: Matrix,
    pub b: Vec<f64>,
    /// Demand satisfaction matrix, k × n.
    pub b_demand: Matrix,
    /// Price sensitivity of demand, k × k.
    pub d_sensitivity: Matrix,
    /// Price-insensitive demand.
    pub d: Vec<f64>,
    /// Half-widths of the uncertainty in d.
    pub d_halfwidth: Vec<f64>,
    /// Producers whose output is fixed before demand is known.
    pub nonadjustable_producers: IndexSet,
    /// Treat the technology duals λ as here-and-now.
    pub lambda_here_and_now: bool,
    /// Treat prices p as here-and-now.
    pub prices_here_and_now: bool,
    /// When positive, every half-width is raised to at least this value so the box is
    /// full-dimensional. Off (0) by default.
    pub min_halfwidth: f64,
}

impl MarketModel {
    /// Model with no here-and-now producers, adjustable λ and p, and no artificial widening.
    pub fn new(
        c: Vec<f64>,
        a: Matrix,
        b: Vec<f64>,
        b_demand: Matrix,
        d_sensitivity: Matrix,
        d: Vec<f64>,
        d_halfwidth: Vec<f64>,
    ) -> Result<Self> {
        let mm = Self {
            c,
            a,
            b,
            b_demand,
            d_sensitivity,
            d,
            d_halfwidth,
            nonadjustable_producers: IndexSet::empty(),
            lambda_here_and_now: false,
            prices_here_and_now: false,
            min_halfwidth: 0.0,
        };
        mm.validate()?;
        Ok(mm)
    }

    pub fn producers(&self) -> usize {
        self.c.len()
    }

    pub fn technology_rows(&self) -> usize {
        self.b.len()
    }

    pub fn demand_rows(&self) -> usize {
        self.d.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m, k) = (self.producers(), self.technology_rows(), self.demand_rows());
        let shape = |name: &str, mat: &Matrix, r: usize, c: usize| {
            if mat.rows() == r && mat.cols() == c {
                Ok(())
            } else {
                Err(invalid(format!(
                    "{name} is {}x{}, expected {r}x{c}",
                    mat.rows(),
                    mat.cols()
                )))
            }
        };
        shape("A", &self.a, m, n)?;
        shape("B", &self.b_demand, k, n)?;
        shape("D", &self.d_sensitivity, k, k)?;
        if self.d_halfwidth.len() != k {
            return Err(invalid("d_halfwidth must have one entry per demand row"));
        }
        check_finite("c", &self.c)?;
        check_finite("b", &self.b)?;
        check_finite("d", &self.d)?;
        check_finite("d_halfwidth", &self.d_halfwidth)?;
        if self.d_halfwidth.iter().any(|&v| v < 0.0) {
            return Err(invalid("d_halfwidth must be nonnegative"));
        }
        if !(self.min_halfwidth >= 0.0 && self.min_halfwidth.is_finite()) {
            return Err(invalid("min_halfwidth must be a finite nonnegative number"));
        }
        if self.nonadjustable_producers.as_slice().last().is_some_and(|&j| j >= n) {
            return Err(invalid("nonadjustable producer index out of range"));
        }
        Ok(())
    }
}

/// Positions of the x, λ and p blocks in the canonical `(x, λ, p)` ordering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockMap {
    pub x: Range<usize>,
    pub lambda: Range<usize>,
    pub p: Range<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarketLcp {
    /// Instance in solver ordering: here-and-now variables first.
    pub instance: UncertainLcpQ,
    /// Canonical block positions.
    pub blocks: BlockMap,
    /// `order[pos]` is the canonical index stored at solver position `pos`.
    pub order: Vec<usize>,
}

impl MarketLcp {
    /// Solver ordering to canonical `(x, λ, p)` ordering.
    pub fn to_canonical(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (pos, &c) in self.order.iter().enumerate() {
            out[c] = v[pos];
        }
        out
    }

    /// Canonical ordering to solver ordering.
    pub fn to_solver_order(&self, v: &[f64]) -> Vec<f64> {
        self.order.iter().map(|&c| v[c]).collect()
    }

    /// Name of the variable at solver position `pos`, e.g. `x2`, `lambda1`, `p1` (1-based).
    pub fn variable_name(&self, pos: usize) -> String {
        let c = self.order[pos];
        if self.blocks.x.contains(&c) {
            format!("x{}", c - self.blocks.x.start + 1)
        } else if self.blocks.lambda.contains(&c) {
            format!("lambda{}", c - self.blocks.lambda.start + 1)
        } else {
            format!("p{}", c - self.blocks.p.start + 1)
        }
    }
}

/// `−a` without signed zeros, so written instances stay readable.
fn negated(a: &Matrix) -> Matrix {
    let data = a.as_slice().iter().map(|v| 0.0 - v).collect();
    Matrix::from_row_major(a.rows(), a.cols(), data).expect("same shape")
}

/// Canonical `(x, λ, p)` matrix, vector and half-widths.
pub fn canonical_lcp(mm: &MarketModel) -> Result<(Matrix, Vec<f64>, Vec<f64>, BlockMap)> {
    mm.validate()?;
    let (n, m, k) = (mm.producers(), mm.technology_rows(), mm.demand_rows());
    let dim = n + m + k;
    let blocks = BlockMap {
        x: 0..n,
        lambda: n..n + m,
        p: n + m..dim,
    };
    let mut mat = Matrix::zeros(dim, dim);
    let xs = IndexSet::range(0, n);
    let ls = IndexSet::range(n, n + m);
    let ps = IndexSet::range(n + m, dim);
    mat.set_block(&xs, &ls, &negated(&mm.a.transpose()));
    mat.set_block(&xs, &ps, &negated(&mm.b_demand.transpose()));
    mat.set_block(&ls, &xs, &mm.a);
    mat.set_block(&ps, &xs, &mm.b_demand);
    mat.set_block(&ps, &ps, &negated(&mm.d_sensitivity));

    let mut q = mm.c.clone();
    q.extend(mm.b.iter().map(|v| 0.0 - v));
    q.extend(mm.d.iter().map(|v| 0.0 - v));

    let mut ubar = vec![0.0; n + m];
    ubar.extend(mm.d_halfwidth.iter().copied());
    if mm.min_halfwidth > 0.0 {
        for u in &mut ubar {
            *u = u.max(mm.min_halfwidth);
        }
    }
    Ok((mat, q, ubar, blocks))
}

/// Builds the uncertain-q instance. Here-and-now variables (fixed producers, and λ or p
/// when flagged) are moved to the front in canonical order; `h` is their count.
pub fn build_lcp(mm: &MarketModel) -> Result<MarketLcp> {
    let (mat, q, ubar, blocks) = canonical_lcp(mm)?;
    let dim = q.len();
    let here = |c: usize| {
        (blocks.x.contains(&c) && mm.nonadjustable_producers.contains(c))
            || (blocks.lambda.contains(&c) && mm.lambda_here_and_now)
            || (blocks.p.contains(&c) && mm.prices_here_and_now)
    };
    let mut order: Vec<usize> = (0..dim).filter(|&c| here(c)).collect();
    let h = order.len();
    order.extend((0..dim).filter(|&c| !here(c)));

    let mut permuted = Matrix::zeros(dim, dim);
    for (a, &ca) in order.iter().enumerate() {
        for (b, &cb) in order.iter().enumerate() {
            permuted[(a, b)] = mat[(ca, cb)];
        }
    }
    let reorder = |v: &[f64]| -> Vec<f64> { order.iter().map(|&c| v[c]).collect() };
    let instance = UncertainLcpQ::new(permuted, reorder(&q), reorder(&ubar), h)?;
    Ok(MarketLcp {
        instance,
        blocks,
        order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{is_psd, PSD_TOL};
    use crate::lcp::solve_lemke;

    fn desk() -> MarketModel {
        MarketModel::new(
            vec![1.0, 2.0],
            Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap(),
            vec![-10.0],
            Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap(),
            Matrix::from_rows(&[vec![-1.0]]).unwrap(),
            vec![5.0],
            vec![0.5],
        )
        .unwrap()
    }

    #[test]
    fn block_pattern_for_unit_sizes() {
        let one = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let mm = MarketModel::new(
            vec![0.0],
            one.clone(),
            vec![0.0],
            one,
            Matrix::zeros(1, 1),
            vec![0.0],
            vec![0.0],
        )
        .unwrap();
        let out = build_lcp(&mm).unwrap();
        let expected = Matrix::from_rows(&[vec![0.0, -1.0, -1.0], vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(out.instance.m(), &expected);
    }

    #[test]
    fn demand_uncertainty_only_in_price_rows() {
        let out = build_lcp(&desk()).unwrap();
        assert_eq!(out.instance.ubar(), &[0.0, 0.0, 0.0, 0.5]);
        assert_eq!(out.instance.qbar(), &[1.0, 2.0, 10.0, -5.0]);
        assert!(is_psd(out.instance.m(), PSD_TOL).unwrap());
    }

    #[test]
    fn nominal_solution_clears_market() {
        let out = build_lcp(&desk()).unwrap();
        let z = solve_lemke(&out.instance.nominal())
            .unwrap()
            .solution()
            .unwrap()
            .z
            .clone();
        let w = out.instance.nominal().slack(&z);
        // demand row: Bx − D p − d
        assert!(w[3].abs() < 1e-9 || z[3].abs() < 1e-9);
        if z[3] > 1e-9 {
            let supply = z[0] + z[1];
            let demand = -z[3] + 5.0;
            assert!((supply - demand).abs() < 1e-9);
        }
    }

    #[test]
    fn here_and_now_producers_lead() {
        let mut mm = desk();
        mm.nonadjustable_producers = IndexSet::new(vec![1], 2).unwrap();
        mm.prices_here_and_now = true;
        let out = build_lcp(&mm).unwrap();
        assert_eq!(out.order, vec![1, 3, 0, 2]);
        assert_eq!(out.instance.h(), 2);
        assert_eq!(out.variable_name(0), "x2");
        assert_eq!(out.variable_name(1), "p1");
        let v = vec![10.0, 20.0, 30.0, 40.0];
        assert_eq!(out.to_canonical(&out.to_solver_order(&v)), v);
    }

    #[test]
    fn artificial_halfwidth_fills_box() {
        let mut mm = desk();
        mm.min_halfwidth = 1e-3;
        let out = build_lcp(&mm).unwrap();
        assert!(out.instance.certain_set().is_empty());
    }
}
