//! Per-condition verification records shared by the uncertain-q and uncertain-M checks.

use serde::{Deserialize, Serialize};

/// The condition a record refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// `z(u) ≥ 0` over the whole box.
    Nonnegativity,
    /// `(Mz(u) + q(u))_K` vanishes identically in `u`.
    SupportSlackIdentity,
    /// `z_N(u)` vanishes identically in `u`.
    OffSupportZero,
    /// `(Mz(u) + q(u))_N ≥ 0` over the whole box.
    OffSupportSlack,
    /// Nominal block equations for uncertain M (support rows at every ζ, coefficient by coefficient).
    NecessaryEquations,
    /// `(Mⁱ_J M̃^{J,j} + Mʲ_J M̃^{J,i}) q_J = 0` for all perturbation pairs.
    KernelCondition,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionRecord {
    pub condition: Condition,
    pub passed: bool,
    /// Worst violation found; 0 when the condition holds with slack.
    pub residual: f64,
    pub tolerance: f64,
    /// 0-based row attaining the worst violation, if the condition is row-wise.
    pub row: Option<usize>,
    /// Point of the uncertainty box attaining the worst violation (empty when not applicable).
    pub worst_point: Vec<f64>,
    /// False when the worst case was estimated by sampling rather than computed exactly.
    pub exact: bool,
}

impl ConditionRecord {
    pub fn new(condition: Condition, residual: f64, tolerance: f64, row: Option<usize>, worst_point: Vec<f64>) -> Self {
        Self {
            condition,
            passed: residual <= tolerance,
            residual,
            tolerance,
            row,
            worst_point,
            exact: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub overall: bool,
    pub conditions: Vec<ConditionRecord>,
}

impl VerificationReport {
    pub fn from_records(conditions: Vec<ConditionRecord>) -> Self {
        Self {
            overall: conditions.iter().all(|c| c.passed),
            conditions,
        }
    }

    pub fn record(&self, condition: Condition) -> Option<&ConditionRecord> {
        self.conditions.iter().find(|c| c.condition == condition)
    }

    /// Largest residual across all conditions.
    pub fn max_residual(&self) -> f64 {
        self.conditions.iter().map(|c| c.residual).fold(0.0, f64::max)
    }

    pub fn failed(&self) -> impl Iterator<Item = &ConditionRecord> {
        self.conditions.iter().filter(|c| !c.passed)
    }
}

/// Minimum of `aᵀu + c` over the box `|u_j| ≤ half_width_j`, with a vertex attaining it.
pub fn box_min_affine(a: &[f64], c: f64, half_width: &[f64]) -> (f64, Vec<f64>) {
    let vertex: Vec<f64> = a
        .iter()
        .zip(half_width)
        .map(|(&aj, &w)| if aj > 0.0 { -w } else { w })
        .collect();
    // evaluated at the vertex so the reported minimum is attained exactly
    let value = c + a.iter().zip(&vertex).map(|(x, y)| x * y).sum::<f64>();
    (value, vertex)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UniquenessVerdict {
    /// Any AAR solution that exists is the only one.
    UniqueIfExists,
    /// The nominal LCP has several solutions, which rules out an AAR solution.
    MultipleNominalNoAar,
    /// The uniqueness result does not cover this instance.
    NotApplicable,
    Unknown,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_box_minimum() {
        let (v, u) = box_min_affine(&[2.0, -1.0, 0.0], 5.0, &[1.0, 3.0, 7.0]);
        assert_eq!(v, 0.0);
        assert_eq!(u[..2], [-1.0, 3.0]);
        let at: f64 = 2.0 * u[0] - u[1] + 5.0;
        assert_eq!(at, v);
    }
}
