//! Solver dispatch and the reports it produces.

use std::fmt::{self, Write as _};
use std::time::Instant;

use serde::Serialize;

use crate::aar_m::{
    sampled_violation_m, solve_enumeration_m, uniqueness_m, verify_affine_m, AffineSolutionM, UncertainLcpM,
};
use crate::aar_q::{
    sampled_violation_q, solve_enumeration, solve_mip_q, solve_psd, uniqueness_check_psd, verify_affine_q,
    AffineSolutionQ, MipQOutcome, MipSettings, PsdNoSolution, PsdOutcome, UncertainLcpQ, DEFAULT_MAX_DOUBLINGS,
    ENUMERATION_MAX_FREE,
};
use crate::dense::{is_psd, IndexSet, Matrix, PSD_TOL};
use crate::error::{Error, Result};
use crate::market::{build_lcp, MarketLcp};
use crate::mip::DEFAULT_NODE_LIMIT;
use crate::verification::{UniquenessVerdict, VerificationReport};

use super::format::{Instance, SolutionFile};

pub const SCHEMA_VERSION: u32 = 1;
/// Box points used for the independent sampled check attached to every solution.
pub const SAMPLE_POINTS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pathway {
    Auto,
    Enumeration,
    PsdLp,
    Mip,
    UncertainM,
}

impl Pathway {
    pub fn name(self) -> &'static str {
        match self {
            Pathway::Auto => "auto",
            Pathway::Enumeration => "enumeration",
            Pathway::PsdLp => "psd-lp",
            Pathway::Mip => "mip",
            Pathway::UncertainM => "uncertain-m",
        }
    }
}

impl fmt::Display for Pathway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Pathway {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Pathway::Auto,
            Pathway::Enumeration,
            Pathway::PsdLp,
            Pathway::Mip,
            Pathway::UncertainM,
        ]
        .into_iter()
        .find(|p| p.name() == s)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown pathway `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub pathway: Pathway,
    /// Initial big-M for the mixed-binary pathway.
    pub big_m: Option<f64>,
    pub node_limit: usize,
    pub max_doublings: usize,
    /// Seed of the sampled cross-check.
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            pathway: Pathway::Auto,
            big_m: None,
            node_limit: DEFAULT_NODE_LIMIT,
            max_doublings: DEFAULT_MAX_DOUBLINGS,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Solved,
    /// Nonexistence is proved.
    NoSolution,
    /// Nothing found, but the search does not rule solutions out (big-M or sampling caveat).
    NoSolutionUnproven,
}

impl SolveStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            SolveStatus::Solved => 0,
            SolveStatus::NoSolution => 1,
            SolveStatus::NoSolutionUnproven => 2,
        }
    }
}

/// Exit code for an error: 3 for bad input or unmet preconditions, 4 for limits and numerical trouble.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::Precondition(_) | Error::Parse(_) => 3,
        Error::SizeLimit { .. } | Error::IterationLimit { .. } | Error::NodeLimit(_) | Error::Numerical(_) => 4,
    }
}

/// Index sets of a reported solution, all 1-based.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexSets {
    /// Support of r.
    #[serde(rename = "K")]
    pub k: Vec<usize>,
    /// Adjustable part of the support.
    #[serde(rename = "J")]
    pub j: Vec<usize>,
    /// Here-and-now part of the support.
    #[serde(rename = "I")]
    pub i: Vec<usize>,
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    /// Indices positive in some nominal solution (psd-lp only).
    #[serde(rename = "P", skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<usize>>,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<Vec<usize>>,
}

impl IndexSets {
    fn new(support: &IndexSet, n: usize, h: usize, p: Option<&IndexSet>) -> Self {
        let here = IndexSet::range(0, h.min(n));
        Self {
            k: support.to_one_based(),
            j: support.difference(&here).to_one_based(),
            i: support.intersection(&here).to_one_based(),
            n: support.complement(n).to_one_based(),
            p: p.map(IndexSet::to_one_based),
            l: p.map(|p| p.complement(n).to_one_based()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportedSolution {
    /// Row-major rows of D.
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
    pub r: Vec<f64>,
    pub sets: IndexSets,
    /// Exact verification; condition rows are 1-based.
    pub verification: VerificationReport,
    /// Largest violation over seeded box samples.
    pub sampled_violation: f64,
}

fn one_based_rows(mut rep: VerificationReport) -> VerificationReport {
    for c in &mut rep.conditions {
        c.row = c.row.map(|r| r + 1);
    }
    rep
}

/// Dimensions and structure of the solved instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstanceEcho {
    pub kind: &'static str,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub h: usize,
    /// Uncertain rows (1-based), uncertain-q and market only.
    #[serde(rename = "U", skip_serializing_if = "Option::is_none")]
    pub uncertain: Option<Vec<usize>>,
    #[serde(rename = "S", skip_serializing_if = "Option::is_none")]
    pub certain: Option<Vec<usize>>,
    /// Market variable names in solver order.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variables: Option<Vec<String>>,
    /// The text file form of the instance.
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub schema: u32,
    pub instance: InstanceEcho,
    pub pathway: Pathway,
    pub status: SolveStatus,
    pub solutions: Vec<ReportedSolution>,
    pub uniqueness: UniquenessVerdict,
    /// Pathway details such as the final big-M or why nonexistence holds.
    pub notes: Vec<String>,
    pub timing_ms: f64,
}

impl SolveReport {
    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let e = &self.instance;
        let _ = write!(out, "instance: {} n={} h={}", e.kind, e.n, e.h);
        if let Some(k) = e.k {
            let _ = write!(out, " k={k}");
        }
        out.push('\n');
        if let (Some(u), Some(s)) = (&e.uncertain, &e.certain) {
            let _ = writeln!(out, "uncertain rows U={} certain rows S={}", braces(u), braces(s));
        }
        let _ = writeln!(out, "pathway: {}", self.pathway);
        let status = match self.status {
            SolveStatus::Solved => "solved",
            SolveStatus::NoSolution => "no AAR solution (proved)",
            SolveStatus::NoSolutionUnproven => "no AAR solution found (not proved)",
        };
        let _ = writeln!(out, "status: {status}");
        for (idx, s) in self.solutions.iter().enumerate() {
            let _ = writeln!(out, "\nsolution {}", idx + 1);
            let _ = writeln!(
                out,
                "  K={} J={} I={} N={}",
                braces(&s.sets.k),
                braces(&s.sets.j),
                braces(&s.sets.i),
                braces(&s.sets.n)
            );
            if let (Some(p), Some(l)) = (&s.sets.p, &s.sets.l) {
                let _ = writeln!(out, "  P={} L={}", braces(p), braces(l));
            }
            for (i, (row, ri)) in s.d.iter().zip(&s.r).enumerate() {
                let name = e
                    .variables
                    .as_ref()
                    .map_or_else(|| format!("z{}", i + 1), |v| v[i].clone());
                let cells: Vec<String> = row.iter().map(|v| format!("{v:>10.6}")).collect();
                let _ = writeln!(out, "  {name:<9} r={ri:>12.6}  D=[{}]", cells.join(" "));
            }
            let verdict = if s.verification.overall { "pass" } else { "FAIL" };
            let _ = writeln!(
                out,
                "  verification: {verdict} (max residual {:.3e}), sampled violation {:.3e}",
                s.verification.max_residual(),
                s.sampled_violation
            );
        }
        let _ = writeln!(out, "\nuniqueness: {}", uniqueness_text(self.uniqueness));
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        let _ = writeln!(out, "time: {:.1} ms", self.timing_ms);
        out
    }
}

fn braces(v: &[usize]) -> String {
    let items: Vec<String> = v.iter().map(usize::to_string).collect();
    format!("{{{}}}", items.join(","))
}

fn uniqueness_text(u: UniquenessVerdict) -> &'static str {
    match u {
        UniquenessVerdict::UniqueIfExists => "any AAR solution is unique",
        UniquenessVerdict::MultipleNominalNoAar => "nominal LCP has several solutions, so no AAR solution exists",
        UniquenessVerdict::NotApplicable => "no uniqueness result applies",
        UniquenessVerdict::Unknown => "unknown",
    }
}

fn matrix_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.to_rows()
}

struct QResult {
    pathway: Pathway,
    status: SolveStatus,
    solutions: Vec<(AffineSolutionQ, Option<IndexSet>)>,
    notes: Vec<String>,
}

fn auto_pathway_q(inst: &UncertainLcpQ) -> Result<Pathway> {
    if is_psd(inst.m(), PSD_TOL)? {
        Ok(Pathway::PsdLp)
    } else if enumeration_applies(inst) {
        Ok(Pathway::Enumeration)
    } else {
        Ok(Pathway::Mip)
    }
}

fn enumeration_applies(inst: &UncertainLcpQ) -> bool {
    inst.certain_set().is_empty() && inst.dim() - inst.h() <= ENUMERATION_MAX_FREE
}

fn enumeration_result(inst: &UncertainLcpQ, notes: Vec<String>) -> Result<QResult> {
    let sols = solve_enumeration(inst)?;
    Ok(QResult {
        pathway: Pathway::Enumeration,
        status: if sols.is_empty() {
            SolveStatus::NoSolution
        } else {
            SolveStatus::Solved
        },
        solutions: sols.into_iter().map(|s| (s, None)).collect(),
        notes,
    })
}

fn run_q(inst: &UncertainLcpQ, opts: &SolveOptions) -> Result<QResult> {
    let pathway = match opts.pathway {
        Pathway::Auto => auto_pathway_q(inst)?,
        Pathway::UncertainM => {
            return Err(Error::InvalidArgument(
                "the uncertain-m pathway needs an uncertain-m instance".into(),
            ))
        }
        p => p,
    };
    match pathway {
        Pathway::Enumeration => enumeration_result(inst, Vec::new()),
        Pathway::PsdLp => match solve_psd(inst)? {
            PsdOutcome::Solved { solution, support_p } => Ok(QResult {
                pathway,
                status: SolveStatus::Solved,
                solutions: vec![(solution, Some(support_p))],
                notes: Vec::new(),
            }),
            PsdOutcome::NoSolution { reason, .. } => Ok(QResult {
                pathway,
                status: SolveStatus::NoSolution,
                solutions: Vec::new(),
                notes: vec![match reason {
                    PsdNoSolution::NominalInfeasible => "the nominal LCP has no solution".into(),
                    PsdNoSolution::LpInfeasible => {
                        "the feasibility LP over the nominal solution set is infeasible".into()
                    }
                }],
            }),
        },
        Pathway::Mip => {
            let settings = MipSettings {
                big_m: opts.big_m,
                max_doublings: opts.max_doublings,
                node_limit: opts.node_limit,
            };
            let outcome = match solve_mip_q(inst, &settings) {
                Ok(o) => o,
                Err(Error::NodeLimit(limit)) if enumeration_applies(inst) => {
                    let note = format!("mip hit the node limit of {limit}; answered by subset enumeration");
                    return enumeration_result(inst, vec![note]);
                }
                Err(e) => return Err(e),
            };
            match outcome {
                MipQOutcome::Solved { solution, big_m, nodes } => Ok(QResult {
                    pathway,
                    status: SolveStatus::Solved,
                    solutions: vec![(solution, None)],
                    notes: vec![format!("big-M {big_m:e}, {nodes} branch-and-bound nodes")],
                }),
                MipQOutcome::NoSolution {
                    big_m_bounded,
                    last_big_m,
                } => {
                    let why = if big_m_bounded {
                        format!("mip infeasible for every big-M up to {last_big_m:e}")
                    } else {
                        format!("no verified mip point for big-M up to {last_big_m:e}")
                    };
                    if enumeration_applies(inst) {
                        enumeration_result(inst, vec![why, "answered by subset enumeration".into()])
                    } else {
                        Ok(QResult {
                            pathway,
                            status: SolveStatus::NoSolutionUnproven,
                            solutions: Vec::new(),
                            notes: vec![why, "a solution with entries beyond big-M is not ruled out".into()],
                        })
                    }
                }
            }
        }
        Pathway::Auto | Pathway::UncertainM => unreachable!(),
    }
}

fn uniqueness_q(inst: &UncertainLcpQ) -> Result<UniquenessVerdict> {
    uniqueness_check_psd(inst)
}

fn q_solutions(
    inst: &UncertainLcpQ,
    sols: Vec<(AffineSolutionQ, Option<IndexSet>)>,
    seed: u64,
) -> Result<Vec<ReportedSolution>> {
    sols.into_iter()
        .map(|(s, p)| {
            let verification = verify_affine_q(inst, &s)?;
            if !verification.overall {
                return Err(Error::Numerical(format!(
                    "solver returned a rule failing verification (residual {:.3e})",
                    verification.max_residual()
                )));
            }
            Ok(ReportedSolution {
                d: matrix_rows(&s.d),
                r: s.r.clone(),
                sets: IndexSets::new(&s.support(), inst.dim(), inst.h(), p.as_ref()),
                verification: one_based_rows(verification),
                sampled_violation: sampled_violation_q(inst, &s, SAMPLE_POINTS, seed),
            })
        })
        .collect()
}

fn echo_q(inst: &UncertainLcpQ, kind: &'static str, text: String) -> InstanceEcho {
    InstanceEcho {
        kind,
        n: inst.dim(),
        k: None,
        h: inst.h(),
        uncertain: Some(inst.uncertain_set().to_one_based()),
        certain: Some(inst.certain_set().to_one_based()),
        variables: None,
        text,
    }
}

/// Solves an instance with the chosen or automatic pathway. Every solution in the report
/// has passed exact verification; a failing one is an error.
pub fn dispatch_solve(instance: &Instance, opts: &SolveOptions) -> Result<SolveReport> {
    let start = Instant::now();
    let text = super::format::serialize_instance(instance);
    let (echo, pathway, status, solutions, uniqueness, notes) = match instance {
        Instance::UncertainQ(inst) => {
            let res = run_q(inst, opts)?;
            let sols = q_solutions(inst, res.solutions, opts.seed)?;
            (
                echo_q(inst, "uncertain-q", text),
                res.pathway,
                res.status,
                sols,
                uniqueness_q(inst)?,
                res.notes,
            )
        }
        Instance::Market(mm) => {
            let lcp = build_lcp(mm)?;
            let res = run_q(&lcp.instance, opts)?;
            let sols = q_solutions(&lcp.instance, res.solutions, opts.seed)?;
            let mut echo = echo_q(&lcp.instance, "market", text);
            echo.variables = Some(variable_names(&lcp));
            let mut notes = res.notes;
            notes.push(format!(
                "here-and-now: producers {}, lambda {}, prices {}; rows are in solver order",
                braces(&mm.nonadjustable_producers.to_one_based()),
                if mm.lambda_here_and_now { "yes" } else { "no" },
                if mm.prices_here_and_now { "yes" } else { "no" },
            ));
            (echo, res.pathway, res.status, sols, uniqueness_q(&lcp.instance)?, notes)
        }
        Instance::UncertainM(inst) => {
            if !matches!(opts.pathway, Pathway::Auto | Pathway::UncertainM) {
                return Err(Error::InvalidArgument(format!(
                    "pathway {} does not apply to uncertain-m instances",
                    opts.pathway
                )));
            }
            let en = solve_enumeration_m(inst)?;
            let mut notes = Vec::new();
            if !en.unavailable.is_empty() {
                let subsets: Vec<String> = en.unavailable.iter().map(|j| j.to_string()).collect();
                notes.push(format!("singular nominal blocks, not searched: {}", subsets.join(" ")));
            }
            if !en.exact {
                notes.push("some quadratic box checks were sampled rather than exact".into());
            }
            let status = if !en.solutions.is_empty() {
                SolveStatus::Solved
            } else if en.is_complete() {
                SolveStatus::NoSolution
            } else {
                SolveStatus::NoSolutionUnproven
            };
            let sols = en
                .solutions
                .iter()
                .map(|s| m_solution(inst, s, opts.seed))
                .collect::<Result<Vec<_>>>()?;
            let echo = InstanceEcho {
                kind: "uncertain-m",
                n: inst.dim(),
                k: Some(inst.k()),
                h: inst.h(),
                uncertain: None,
                certain: None,
                variables: None,
                text,
            };
            (echo, Pathway::UncertainM, status, sols, uniqueness_m(inst)?, notes)
        }
    };
    Ok(SolveReport {
        schema: SCHEMA_VERSION,
        instance: echo,
        pathway,
        status,
        solutions,
        uniqueness,
        notes,
        timing_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

fn m_solution(inst: &UncertainLcpM, s: &AffineSolutionM, seed: u64) -> Result<ReportedSolution> {
    let verification = verify_affine_m(inst, s)?;
    Ok(ReportedSolution {
        d: matrix_rows(&s.d),
        r: s.r.clone(),
        sets: IndexSets::new(&s.support(), inst.dim(), inst.h(), None),
        verification: one_based_rows(verification),
        sampled_violation: sampled_violation_m(inst, s, SAMPLE_POINTS, seed),
    })
}

fn variable_names(lcp: &MarketLcp) -> Vec<String> {
    (0..lcp.order.len()).map(|i| lcp.variable_name(i)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub schema: u32,
    pub kind: &'static str,
    pub passed: bool,
    pub verification: VerificationReport,
    pub sampled_violation: f64,
}

impl VerifyReport {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "verification: {}", if self.passed { "pass" } else { "FAIL" });
        for c in &self.verification.conditions {
            let where_ = c.row.map(|r| format!(" row {r}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "  {:<24} {} residual {:.3e} (tol {:.1e}){where_}{}",
                serde_json::to_value(c.condition)
                    .ok()
                    .and_then(|v| v.as_str().map(String::from))
                    .unwrap_or_default(),
                if c.passed { "pass" } else { "FAIL" },
                c.residual,
                c.tolerance,
                if c.exact { "" } else { " [sampled]" },
            );
        }
        let _ = writeln!(out, "sampled violation: {:.3e}", self.sampled_violation);
        out
    }
}

/// Checks a candidate rule against an instance. Market instances are checked in solver order.
pub fn verify_solution(instance: &Instance, solution: &SolutionFile, seed: u64) -> Result<VerifyReport> {
    let (kind, verification, sampled) = match (instance, solution) {
        (Instance::UncertainQ(inst), SolutionFile::UncertainQ(s)) => (
            "uncertain-q",
            verify_affine_q(inst, s)?,
            sampled_violation_q(inst, s, SAMPLE_POINTS, seed),
        ),
        (Instance::Market(mm), SolutionFile::UncertainQ(s)) => {
            let lcp = build_lcp(mm)?;
            let inst = &lcp.instance;
            (
                "market",
                verify_affine_q(inst, s)?,
                sampled_violation_q(inst, s, SAMPLE_POINTS, seed),
            )
        }
        (Instance::UncertainM(inst), SolutionFile::UncertainM(s)) => (
            "uncertain-m",
            verify_affine_m(inst, s)?,
            sampled_violation_m(inst, s, SAMPLE_POINTS, seed),
        ),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "a {} instance cannot be checked against this solution kind",
                instance.kind()
            )))
        }
    };
    Ok(VerifyReport {
        schema: SCHEMA_VERSION,
        kind,
        passed: verification.overall,
        verification: one_based_rows(verification),
        sampled_violation: sampled,
    })
}
