mod common;

use aarlcp::aar_m::{solve_enumeration_m, verify_affine_m, AffineSolutionM};
use aarlcp::aar_q::{
    solve_enumeration, solve_mip_q, solve_psd, uniqueness_check_psd, verify_affine_q, AffineSolutionQ, MipQOutcome,
    MipSettings, PsdNoSolution, PsdOutcome,
};
use aarlcp::dense::{is_psd, Matrix, PSD_TOL};
use aarlcp::io::{dispatch_solve, parse_instance, Instance, Pathway, SolveOptions, SolveStatus};
use aarlcp::lcp::solve_lemke;
use aarlcp::market::{build_lcp, MarketModel};
use aarlcp::verification::UniquenessVerdict;
use common::*;

#[test]
fn first_example_stated_rules_are_found() {
    let inst = example_one();
    let sols = solve_enumeration(&inst).unwrap();
    for (d, r) in example_one_stated() {
        assert!(
            sols.iter()
                .any(|s| max_entry_diff(&rows(&s.d), &d) <= 1e-9 && max_vec_diff(&s.r, &r) <= 1e-9),
            "stated rule D={d:?} r={r:?} missing"
        );
    }
}

#[test]
fn first_example_full_support_rule_is_valid() {
    // J = {1, 2}: D = −M⁻¹, r = −M⁻¹q̄; checked by direct substitution
    let inst = example_one();
    let m = rows(inst.m());
    let minv_col0 = gauss_solve(&m, &[1.0, 0.0]).unwrap();
    let minv_col1 = gauss_solve(&m, &[0.0, 1.0]).unwrap();
    let d = vec![vec![-minv_col0[0], -minv_col1[0]], vec![-minv_col0[1], -minv_col1[1]]];
    let r = gauss_solve(&m, &[100.0, 22.0]).unwrap();
    assert!(max_entry_diff(&d, &vec![vec![1.0, -5.0], vec![-0.5, 2.0]]) < 1e-12);
    assert!(max_vec_diff(&r, &[10.0, 6.0]) < 1e-12);
    let sol = AffineSolutionQ::new(mat(&d), r).unwrap();
    assert!(sampled_violation_q(&inst, &sol, 1000, 1) <= 1e-9);
    assert!(verify_affine_q(&inst, &sol).unwrap().overall);
    assert_eq!(solve_enumeration(&inst).unwrap().len(), 3);
}

#[test]
fn every_enumerated_rule_survives_sampling() {
    let inst = example_one();
    for s in solve_enumeration(&inst).unwrap() {
        assert!(sampled_violation_q(&inst, &s, 1000, 2) <= 1e-7);
    }
}

#[test]
fn closing_psd_example_has_no_rule_on_any_pathway() {
    let inst = no_solution_example();
    assert!(solve_enumeration(&inst).unwrap().is_empty());
    assert!(matches!(
        solve_psd(&inst).unwrap(),
        PsdOutcome::NoSolution {
            reason: PsdNoSolution::LpInfeasible,
            ..
        }
    ));
    let settings = MipSettings {
        big_m: Some(1e3),
        max_doublings: 10,
        ..MipSettings::default()
    };
    assert!(matches!(
        solve_mip_q(&inst, &settings).unwrap(),
        MipQOutcome::NoSolution { .. }
    ));
    // the nominal problem is solvable, so nonexistence comes from the uncertainty
    let z = solve_lemke(&inst.nominal()).unwrap().solution().unwrap().z.clone();
    let m = rows(inst.m());
    assert!(brute_force_lcp(&m, inst.qbar(), 1e-9)
        .iter()
        .any(|b| max_vec_diff(b, &z) < 1e-8));
}

#[test]
fn psd_full_box_is_unique_if_exists() {
    assert_eq!(
        uniqueness_check_psd(&no_solution_example()).unwrap(),
        UniquenessVerdict::UniqueIfExists
    );
    assert_eq!(
        uniqueness_check_psd(&example_one()).unwrap(),
        UniquenessVerdict::NotApplicable
    );
}

#[test]
fn uncertain_matrix_example() {
    let inst = uncertain_m_example();
    let en = solve_enumeration_m(&inst).unwrap();
    assert!(en.is_complete());
    assert_eq!(en.solutions.len(), 1);
    let s = &en.solutions[0];
    assert!(max_vec_diff(&s.r, &[1.0, 4.0]) <= 1e-9);
    assert!(max_entry_diff(&rows(&s.d), &vec![vec![-1.0], vec![0.0]]) <= 1e-9);
    assert!(sampled_violation_m(&inst, s, 1000, 3) <= 1e-9);
}

#[test]
fn uncertain_matrix_rule_checked_directly() {
    let inst = uncertain_m_example();
    let good = AffineSolutionM::new(Matrix::column(&[-1.0, 0.0]), vec![1.0, 4.0]).unwrap();
    assert!(verify_affine_m(&inst, &good).unwrap().overall);
    let off = AffineSolutionM::new(Matrix::column(&[-1.0, 0.0]), vec![1.0, 4.5]).unwrap();
    assert!(!verify_affine_m(&inst, &off).unwrap().overall);
    assert!(sampled_violation_m(&inst, &off, 200, 4) > 1e-3);
}

#[test]
fn parsed_examples_match_constructed_ones() {
    let q = "kind uncertain-q\nn 2\nh 0\nM\n4 10\n1 2\nqbar -100 -22\nubar 1 1\n";
    assert_eq!(parse_instance(q).unwrap(), Instance::UncertainQ(example_one()));
    let m = "kind uncertain-m\nn 2\nk 1\nh 0\nM0\n4 1\n0 4\nM1\n0 1\n0 0\nq -8 -16\n";
    assert_eq!(parse_instance(m).unwrap(), Instance::UncertainM(uncertain_m_example()));
}

#[test]
fn dispatch_examples() {
    let ex1 = Instance::UncertainQ(example_one());
    let opts = SolveOptions {
        pathway: Pathway::Enumeration,
        ..SolveOptions::default()
    };
    let rep = dispatch_solve(&ex1, &opts).unwrap();
    assert_eq!(rep.status, SolveStatus::Solved);
    assert_eq!(rep.solutions.len(), 3);
    assert!(rep
        .solutions
        .iter()
        .all(|s| s.verification.overall && s.sampled_violation <= 1e-7));

    let rep = dispatch_solve(&Instance::UncertainQ(no_solution_example()), &SolveOptions::default()).unwrap();
    assert_eq!(rep.pathway, Pathway::PsdLp);
    assert_eq!(rep.status, SolveStatus::NoSolution);
    assert!(rep.solutions.is_empty());

    let rep = dispatch_solve(&Instance::UncertainM(uncertain_m_example()), &SolveOptions::default()).unwrap();
    assert_eq!(rep.pathway, Pathway::UncertainM);
    assert_eq!(rep.solutions[0].r, vec![1.0, 4.0]);
}

fn desk_market() -> MarketModel {
    MarketModel::new(
        vec![1.0, 2.0],
        mat(&[vec![1.0, 1.0]]),
        vec![-10.0],
        mat(&[vec![1.0, 1.0]]),
        mat(&[vec![-1.0]]),
        vec![5.0],
        vec![0.5],
    )
    .unwrap()
}

#[test]
fn desk_market_clears() {
    let lcp = build_lcp(&desk_market()).unwrap();
    assert!(is_psd(lcp.instance.m(), PSD_TOL).unwrap());
    let m = rows(lcp.instance.m());
    let sols = brute_force_lcp(&m, lcp.instance.qbar(), 1e-9);
    assert!(!sols.is_empty());
    for z in sols {
        let p = z[3];
        if p > 1e-9 {
            assert!((z[0] + z[1] - (5.0 - p)).abs() < 1e-9);
        }
    }
}

#[test]
fn market_with_certain_rows_goes_to_mip_when_not_psd() {
    // a price-increasing demand block makes M indefinite, so auto picks mip
    let mut mm = desk_market();
    mm.d_sensitivity = mat(&[vec![1.0]]);
    let lcp = build_lcp(&mm).unwrap();
    assert!(!is_psd(lcp.instance.m(), PSD_TOL).unwrap());
    let rep = dispatch_solve(&Instance::Market(mm), &SolveOptions::default()).unwrap();
    assert_eq!(rep.pathway, Pathway::Mip);
    assert_eq!(rep.instance.variables.as_ref().unwrap()[3], "p1");
}

#[test]
fn psd_market_agrees_across_pathways() {
    let inst = Instance::Market(desk_market());
    let psd = dispatch_solve(&inst, &SolveOptions::default()).unwrap();
    let mip = dispatch_solve(
        &inst,
        &SolveOptions {
            pathway: Pathway::Mip,
            ..SolveOptions::default()
        },
    )
    .unwrap();
    assert_eq!(psd.pathway, Pathway::PsdLp);
    assert_eq!(psd.status == SolveStatus::Solved, mip.status == SolveStatus::Solved);
}
