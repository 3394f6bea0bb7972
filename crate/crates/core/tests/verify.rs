use hsdm::gfun::GFunction;
use hsdm::hilbert::*;
use hsdm::iterates::{iterate, Scheme};
use hsdm::schedules::Schedule;
use hsdm::verify::instances::*;
use hsdm::verify::*;

#[test]
fn every_lemma_survives_its_fuzz_suite_and_trips_its_negative_case() {
    for kind in LemmaKind::ALL {
        let rep = check_lemma(kind, 300, DEFAULT_SEED).unwrap();
        assert_eq!(rep.violations, 0, "{kind}: {rep:?}");
        assert_eq!(rep.negative_case, Some(true), "{kind}");
        assert!(rep.premise_held > 0, "{kind}: premise never held");
        assert!(rep.passed());
    }
}

#[test]
fn lemma_reports_are_reproducible() {
    let a = check_lemma(LemmaKind::Switch, 200, 5).unwrap();
    let b = check_lemma(LemmaKind::Switch, 200, 5).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, check_lemma(LemmaKind::Switch, 200, 6).unwrap());
    assert_eq!("core-single-diag".parse::<LemmaKind>().unwrap(), LemmaKind::CoreSingleDiag);
    assert!("nope".parse::<LemmaKind>().is_err());
}

#[test]
fn individual_cases_classify_correctly() {
    // u = u*: the conclusion ⟨0, ·⟩ < ε holds trivially
    let z = pt(&[0.0, 0.0]);
    let e = switch_case(&z, &z, &pt(&[1.0, 0.0]), 0.5, 1).unwrap();
    assert!(e.side && e.premise && e.conclusion);
    assert!(switch_case(&z, &z, &z, 1.5, 1).is_err());

    let f = fact_sum_case(&[0.5, 0.5, 0.5], 0, 2);
    // 0.5·0.25 + 0.5·0.5 + 0.5 = 0.875
    assert!((f.margin - 0.125).abs() < 1e-15);
    assert!(!fact_sum_case(&[0.5], 1, 0).side);

    let v = vec![pt(&[0.0]), pt(&[0.1])];
    let s = subseq_case(&v, &|_| 1, &pt(&[0.05]), 0.2, 0).unwrap();
    assert!(s.premise && s.conclusion);
}

#[test]
fn perm_negative_needs_a_relaxed_premise() {
    let (inst, x, eps) = perm_negative().unwrap();
    let strict = perm_case(&inst, &x, 1, eps, 1.0).unwrap();
    assert!(!strict.premise);
    let relaxed = perm_case(&inst, &x, 1, eps, 10.0).unwrap();
    assert!(relaxed.side && relaxed.premise && !relaxed.conclusion);
    assert!(perm_case(&inst, &x, 2, eps, 1.0).is_err());
    let (_, kappa) = sharp_line_modulus(0.3).unwrap();
    assert!(kappa > 0.0 && kappa < 1.0);
}

#[test]
fn rotated_composite_order() {
    let ops = vec![
        OperatorSpec::nonexpansive(ball(&[0.0, 0.0], 1.0)).unwrap(),
        OperatorSpec::nonexpansive(halfspace(&[1.0, 0.0], 0.0)).unwrap(),
    ];
    let x = pt(&[3.0, 4.0]);
    // k = 1: T_2 first, then T_1
    assert!(rotated_composite(&ops, 1, &x).dist(&pt(&[0.0, 1.0])) < 1e-15);
}

fn brute_meta(points: &[Point], eps: f64, g: impl Fn(u64) -> u64, cap: u64) -> Option<u64> {
    (0..=cap).find(|&n| {
        let hi = (n + g(n)) as usize;
        let w = &points[n as usize..=hi];
        w.iter().all(|p| w.iter().all(|q| p.dist(q) <= eps))
    })
}

#[test]
fn metastability_witness_matches_brute_force() {
    let inst = quadratic_interior();
    let tr = iterate(Scheme::HsdmSingle, &[inst.t.clone()], &inst.g, &inst.schedule, &inst.start, 3000).unwrap();
    for (expr, f) in [("n+1", (|n| n + 1) as fn(u64) -> u64), ("2*n", |n| 2 * n), ("5", |_| 5)] {
        for eps in [0.1, 0.01, 0.003] {
            let q = MetaQuery::new(eps, expr.parse().unwrap(), 1000).unwrap();
            let got = empirical_metastability(&tr.points, &q).unwrap();
            assert_eq!(got.n(), brute_meta(&tr.points, eps, f, 1000), "{expr} eps = {eps}");
        }
    }
    let spread: Vec<Point> = (0..30).map(|i| pt(&[i as f64])).collect();
    let q = MetaQuery::new(0.5, "n+1".parse().unwrap(), 100).unwrap();
    assert!(matches!(empirical_metastability(&spread, &q), Err(VerifyError::TooShort { .. })));
    assert!(MetaQuery::new(0.0, "n".parse().unwrap(), 10).is_err());
}

#[test]
fn exhausted_search_is_reported() {
    let pts: Vec<Point> = (0..40).map(|i| pt(&[i as f64])).collect();
    let q = MetaQuery::new(0.5, "1".parse::<GFunction>().unwrap(), 10).unwrap();
    assert_eq!(empirical_metastability(&pts, &q).unwrap(), MetaOutcome::Exhausted { cap: 10 });
}

#[test]
fn asy_witness_is_the_first_small_residual() {
    let fam = two_projection_family();
    let tr = iterate(Scheme::HsdmCyclic, &fam.ops, &fam.g, &fam.schedule, &fam.start, 500).unwrap();
    let w = asy_witness(&tr.points, &fam.ops, 0.01).unwrap();
    let res = |n: usize| {
        let u = &tr.points[n];
        u.dist(&hsdm::iterates::cyclic_composite(&fam.ops, n, u))
    };
    assert!(res(w as usize) <= 0.01);
    assert!((0..w as usize).all(|n| res(n) > 0.01));
    assert!(asy_witness(&tr.points, &[], 0.1).is_none());
}

#[test]
fn vip_certificate_at_the_solution() {
    let inst = quadratic_interior();
    let u = inst.solution.clone().unwrap();
    let rep = check_vip_certificate(&inst.g, &u, &[inst.t.clone()], 1e-6, 0.0, 500, 0.5, 1).unwrap();
    assert!(rep.passed());
    assert!(rep.max_value <= 1e-12);
    // a point away from the solution has a positive inner product somewhere
    let bad = check_vip_certificate(&inst.g, &pt(&[-0.3, 0.0]), &[inst.t.clone()], 0.01, 0.0, 500, 0.5, 1).unwrap();
    assert!(!bad.passed());
    assert!(check_vip_certificate(&inst.g, &u, &[], 0.1, 0.0, 10, 0.5, 1).is_err());
}

#[test]
fn single_confinement_holds_on_the_quadratic_instance() {
    let inst = quadratic_interior();
    let tr = iterate(Scheme::HsdmSingle, &[inst.t.clone()], &inst.g, &inst.schedule, &inst.start, 2000).unwrap();
    let w = inst.solution.clone().unwrap();
    let input = ConfinementInput {
        traj: &tr,
        ops: std::slice::from_ref(&inst.t),
        g: &inst.g,
        v: &inst.witness,
        w: Some(&w),
        d: 1,
        mode: ConfinementMode::DiamSingle,
    };
    let rep = check_confinement(&input).unwrap();
    assert!(rep.passed, "{rep:?}");
    assert!(rep.max_iterate <= 0.5);
    assert!(rep.max_resolvent.is_some());
}

#[test]
fn stationary_trajectory_is_confined() {
    let t = OperatorSpec::nonexpansive(ball(&[0.0, 0.0], 1.0)).unwrap();
    let g = attractor(&Point::zeros(2), 0.0).unwrap();
    let s = Schedule::power(0.5).unwrap();
    let tr = iterate(Scheme::HsdmSingle, &[t.clone()], &g, &s, &Point::zeros(2), 50).unwrap();
    assert!(tr.points.iter().all(|p| p.norm() == 0.0));
    let z = Point::zeros(2);
    let rep = check_confinement(&ConfinementInput {
        traj: &tr,
        ops: std::slice::from_ref(&t),
        g: &g,
        v: &z,
        w: Some(&z),
        d: 1,
        mode: ConfinementMode::DiamSingle,
    })
    .unwrap();
    assert!(rep.passed);
    assert_eq!(rep.max_iterate, 0.0);
}

#[test]
fn confinement_hypotheses_are_checked() {
    let inst = audit_instance(0.0).unwrap();
    let tr = iterate(Scheme::HsdmSingle, &[inst.t.clone()], &inst.g, &inst.schedule, &inst.start, 10).unwrap();
    let w = pt(&[0.7, 0.3]);
    let input = ConfinementInput {
        traj: &tr,
        ops: std::slice::from_ref(&inst.t),
        g: &inst.g,
        v: &inst.witness,
        w: Some(&w),
        d: 1,
        mode: ConfinementMode::DiamSingle,
    };
    // ‖v − w‖ ≈ 0.76 > d/4
    assert!(matches!(check_confinement(&input), Err(VerifyError::Hypotheses(_))));
    let no_w = ConfinementInput { w: None, ..input };
    assert!(matches!(check_confinement(&no_w), Err(VerifyError::Hypotheses(_))));
    let not_fixed = pt(&[3.0, 0.0]);
    let bad_v = ConfinementInput { v: &not_fixed, w: Some(&w), ..input };
    assert!(matches!(check_confinement(&bad_v), Err(VerifyError::Hypotheses(_))));
    assert_eq!("diam-family".parse::<ConfinementMode>().unwrap(), ConfinementMode::DiamFamily);
}

#[test]
fn family_confinement_on_the_two_projection_instance() {
    let fam = two_projection_family();
    let tr = iterate(Scheme::HsdmCyclic, &fam.ops, &fam.g, &fam.schedule, &fam.start, 2000).unwrap();
    let w = pt(&[0.1, 0.05]);
    let rep = check_confinement(&ConfinementInput {
        traj: &tr,
        ops: &fam.ops,
        g: &fam.g,
        v: &fam.witness,
        w: Some(&w),
        d: 1,
        mode: ConfinementMode::DiamFamily,
    })
    .unwrap();
    assert!(rep.passed, "{rep:?}");
    assert!(rep.max_iterate <= 0.25);
    assert!(rep.max_g_iterate.is_some());
}

#[test]
fn audit_runs_pass_or_run_out_of_budget() {
    let insts = vec![audit_instance(0.0).unwrap(), audit_instance(0.25).unwrap()];
    let (rep, runs) = run_audit_suite(&insts, &[0.5, 1.0], 6, 3, 1_000_000).unwrap();
    assert_eq!(runs.len(), 6);
    assert_eq!(rep.violations, 0, "{runs:?}");
    assert!(runs.iter().all(|r| r.status != RunStatus::Violated));
    assert!(runs.iter().any(|r| r.status == RunStatus::Passed));
    let tiny = run_audit(&insts[0], Strategy::Random, 0.5, 1, 2).unwrap();
    assert_eq!(tiny.status, RunStatus::BudgetExceeded);
    assert!(tiny.note.is_some());
    assert!(run_audit_suite(&[], &[0.5], 1, 0, 10).is_err());
}

#[test]
fn branch_and_anticipating_end_to_end() {
    let inst = audit_instance(0.0).unwrap();
    let b = run_branch_end_to_end(&inst, 1.0, 7, 1_000_000).unwrap();
    assert_ne!(b.status, RunStatus::Violated, "{b:?}");
    if let Some(v) = b.value {
        if b.status == RunStatus::Passed {
            assert!(v < b.bound + CHECK_SLACK);
        }
    }
    let g: GFunction = "n+1".parse().unwrap();
    let e = run_anticipating_end_to_end(&inst, 1.0, &g, 1_000_000).unwrap();
    assert_ne!(e.status, RunStatus::Violated, "{e:?}");
    if e.status == RunStatus::Passed {
        assert!(e.distance.unwrap() <= 1.0);
    }
    assert_eq!("branch".parse::<Strategy>().unwrap(), Strategy::Branch);
}
