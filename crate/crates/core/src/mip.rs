//! Depth-first branch-and-bound for pure feasibility over binary variables.

use serde::{Deserialize, Serialize};

use crate::dense::IndexSet;
use crate::error::{invalid, Result};
use crate::lp::{check_feasibility, LinearProgram, LpStatus};

/// Binary variables count as integral within this distance of 0 or 1.
pub const TOL_INT: f64 = 1e-6;
pub const DEFAULT_NODE_LIMIT: usize = 100_000;

/// An LP core plus the subset of its variables restricted to {0, 1}.
#[derive(Clone, Debug)]
pub struct MixedBinaryProgram {
    lp: LinearProgram,
    binaries: IndexSet,
}

impl MixedBinaryProgram {
    /// Requires every binary variable to carry bounds `[0, 1]` in `lp`.
    pub fn new(lp: LinearProgram, binaries: IndexSet) -> Result<Self> {
        lp.validate()?;
        if let Some(&last) = binaries.as_slice().last() {
            if last >= lp.num_vars() {
                return Err(invalid(format!("binary index {last} out of range")));
            }
        }
        for &j in &binaries {
            if lp.lower()[j] != 0.0 || lp.upper()[j] != 1.0 {
                return Err(invalid(format!(
                    "binary variable {j} must have bounds [0, 1], has [{}, {}]",
                    lp.lower()[j],
                    lp.upper()[j]
                )));
            }
        }
        Ok(Self { lp, binaries })
    }

    pub fn lp(&self) -> &LinearProgram {
        &self.lp
    }

    pub fn binaries(&self) -> &IndexSet {
        &self.binaries
    }

    /// Largest constraint violation at `x`, plus the distance of each binary from {0, 1}.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let integrality = self
            .binaries
            .iter()
            .map(|&j| (x[j] - x[j].round()).abs())
            .fold(0.0, f64::max);
        self.lp.max_violation(x).max(integrality)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MipStatus {
    Feasible,
    Infeasible,
    NodeLimit,
}

#[derive(Clone, Debug)]
pub struct MipOutcome {
    pub status: MipStatus,
    /// Full assignment (binaries exactly 0 or 1) when feasible; empty otherwise.
    pub assignment: Vec<f64>,
    pub nodes: usize,
}

/// Searches for any point satisfying the constraints with integral binaries.
///
/// Nodes are explored depth-first. At each node the LP relaxation is solved for
/// feasibility only; an infeasible relaxation prunes the node. The most fractional
/// binary (lowest index on ties) is branched on, the nearer rounding first. When the
/// relaxation point is integral the binaries are fixed at their rounded values and
/// the LP is re-solved so the returned assignment has exactly integral binaries.
pub fn solve_mip_feasibility(p: &MixedBinaryProgram, node_limit: usize) -> Result<MipOutcome> {
    // each stack entry lists the binaries fixed so far
    let mut stack: Vec<Vec<(usize, f64)>> = vec![Vec::new()];
    let mut nodes = 0;
    while let Some(fixings) = stack.pop() {
        if nodes >= node_limit {
            return Ok(MipOutcome {
                status: MipStatus::NodeLimit,
                assignment: Vec::new(),
                nodes,
            });
        }
        nodes += 1;
        let mut lp = p.lp.clone();
        for &(j, v) in &fixings {
            lp.fix(j, v);
        }
        let relax = check_feasibility(&lp)?;
        if relax.status != LpStatus::Optimal {
            continue;
        }
        let x = relax.x;

        let mut branch: Option<(usize, f64)> = None;
        for &j in &p.binaries {
            let frac = (x[j] - x[j].round()).abs();
            if frac > TOL_INT && branch.is_none_or(|(_, f)| frac > f) {
                branch = Some((j, frac));
            }
        }

        match branch {
            None => {
                for &j in &p.binaries {
                    lp.fix(j, x[j].round().clamp(0.0, 1.0));
                }
                let snapped = check_feasibility(&lp)?;
                if snapped.status == LpStatus::Optimal {
                    return Ok(MipOutcome {
                        status: MipStatus::Feasible,
                        assignment: snapped.x,
                        nodes,
                    });
                }
            }
            Some((j, _)) => {
                let first = if x[j] >= 0.5 { 1.0 } else { 0.0 };
                let mut second = fixings.clone();
                second.push((j, 1.0 - first));
                let mut first_child = fixings;
                first_child.push((j, first));
                // LIFO: the nearer rounding is popped first
                stack.push(second);
                stack.push(first_child);
            }
        }
    }
    Ok(MipOutcome {
        status: MipStatus::Infeasible,
        assignment: Vec::new(),
        nodes,
    })
}
