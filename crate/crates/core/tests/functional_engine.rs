use hsdm::engine::*;
use hsdm::hilbert::*;
use hsdm::verify::instances::{attractor, ball, pt};
use num_bigint::BigUint;
use num_rational::BigRational;

fn ball_op() -> OperatorSpec {
    OperatorSpec::nonexpansive(ball(&[0.0, 0.0], 0.5)).unwrap()
}

fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

#[test]
fn tower_constants_are_exact() {
    // ε = 1/2, τ = 1/4, d = 1: ε̃ = (3/4)²(1/2)/14 = 9/448
    let (et, i0, n) = tower_constants(&r(1, 2), &r(1, 4), 1);
    assert_eq!(et, r(9, 448));
    // least k with (1/4)^{k+1} ≤ ε̃/6 = 3/896
    let target = r(3, 896);
    let scan = (0u32..).find(|&k| num_traits::pow(r(1, 4), (k + 1) as usize) <= target).unwrap() as u64;
    assert_eq!(i0, scan.max(1));
    let eps4 = num_traits::pow(r(9, 448), 4);
    let want = (r(8, 1) / eps4).ceil().to_integer().to_biguint().unwrap();
    assert_eq!(n, want);
}

#[test]
fn tau_zero_gives_i0_one() {
    assert_eq!(i0_exact(&r(1, 100), &r(0, 1), 3), 1);
    let p = tower_params(1.0, 0.0, 1).unwrap();
    assert_eq!(p.i0, 1);
    assert!((p.eps_tilde - 1.0 / 14.0).abs() < 1e-16);
    assert!((p.weight - p.eps_tilde.powi(2) / 6.0).abs() < 1e-18);
    assert!(tower_params(1.5, 0.0, 1).is_err());
    assert!(tower_params(0.5, 1.0, 1).is_err());
    assert!(tower_params(0.5, 0.0, 0).is_err());
}

#[test]
fn admits_treats_tiny_residuals_as_zero() {
    assert!(admits(0.5, 0.4));
    assert!(!admits(0.5, 0.5));
    assert!(admits(0.0, 0.0));
    assert!(!admits(0.0, 1e-6));
}

#[test]
fn a_predicate_holds_at_the_target() {
    let p = pt(&[0.1, 0.2]);
    assert!(a_predicate(0.1, &p, &pt(&[5.0, 5.0]), &p, 1));
    // far from p with v = p the inequality fails
    assert!(!a_predicate(0.1, &pt(&[1.0, 0.0]), &p, &p, 1));
}

#[test]
fn eps_projection_wins_against_constant_and_random_adversaries() {
    let t = ball_op();
    let v0 = pt(&[0.9, 0.1]);
    let w = Point::zeros(2);
    let cfs = vec![
        constant_adversary(pt(&[0.0, 0.5]), 0.1),
        constant_adversary(pt(&[3.0, 0.0]), 1.0),
        random_adversary(t.clone(), w.clone(), 0.5, 3),
        random_adversary(t.clone(), w.clone(), 0.5, 4),
    ];
    for cf in &cfs {
        for eps in [0.5, 0.25] {
            let res = eps_projection(&v0, &t, 0.5, eps, cf, &w, 1).unwrap();
            let (c1, c2) = check_projection_claim(&res, &v0, &t, 0.5, eps, cf).unwrap();
            assert!(c1 && c2, "{cf:?} eps = {eps}");
            assert!(res.index_used >= 1 && res.index_used <= res.n_eps);
        }
    }
}

#[test]
fn pair_projection_satisfies_both_claims() {
    let t = ball_op();
    let v0 = pt(&[0.9, -0.4]);
    let w = Point::zeros(2);
    let a = random_adversary(t.clone(), w.clone(), 0.5, 9);
    let b = constant_adversary(pt(&[0.2, 0.2]), 0.2);
    let e = Engine::default();
    let res = e.eps_projection_pair(&v0, &t, 0.5, 0.25, 0.5, &a, &b, &w, 1).unwrap();
    assert!(check_projection_claim(&res, &v0, &t, 0.5, 0.5, &a).unwrap() == (true, true));
    assert!(check_projection_claim(&res, &v0, &t, 0.25, 0.5, &b).unwrap() == (true, true));
}

#[test]
fn picard_tower_passes_the_audit() {
    for tau in [0.0, 0.25] {
        let t = ball_op();
        let g = attractor(&pt(&[0.7, 0.3]), tau).unwrap();
        let w = Point::zeros(2);
        for cf in [constant_adversary(w.clone(), 1.0), random_adversary(t.clone(), w.clone(), 0.5, 5)] {
            let e = Engine::default();
            let res = e.picard_tower(&pt(&[-0.3, 0.2]), &t, &g, 1.0, 0.5, &cf, 1, &w).unwrap();
            let rep = audit(&res, &t, &g, &cf, 0.5, 1.0).unwrap();
            assert!(rep.passed(), "tau = {tau}: {rep:?}");
            assert!(res.trace.chain.iter().all(|c| c.contraction_ok && c.telescoped_ok));
            assert_eq!(res.trace.params.i0, tower_params(1.0, tau, 1).unwrap().i0);
        }
    }
}

#[test]
fn budget_exhaustion_is_an_error_not_a_result() {
    let t = ball_op();
    let g = attractor(&pt(&[0.7, 0.3]), 0.25).unwrap();
    let w = Point::zeros(2);
    let cf = random_adversary(t.clone(), w.clone(), 0.5, 1);
    let e = Engine::new(2);
    let err = e.picard_tower(&pt(&[-0.3, 0.2]), &t, &g, 0.5, 0.5, &cf, 1, &w).unwrap_err();
    assert!(matches!(err.error, EngineError::BudgetExceeded { limit: 2, .. }));
}

#[test]
fn tower_rejects_bad_arguments() {
    let t = ball_op();
    let w = Point::zeros(2);
    let cf = constant_adversary(w.clone(), 1.0);
    let e = Engine::default();
    let id = OperatorSpec::identity();
    assert!(e.picard_tower(&w, &t, &id, 0.5, 0.5, &cf, 1, &w).is_err());
    let g = attractor(&pt(&[0.1, 0.0]), 0.0).unwrap();
    assert!(e.picard_tower(&w, &t, &g, 0.5, 1.5, &cf, 1, &w).is_err());
}

#[test]
fn transcripts_are_deterministic() {
    let run = || {
        let t = ball_op();
        let g = attractor(&pt(&[0.7, 0.3]), 0.25).unwrap();
        let w = Point::zeros(2);
        let cf = random_adversary(t.clone(), w.clone(), 0.5, 21);
        let e = Engine::default().with_transcript();
        e.picard_tower(&pt(&[-0.3, 0.2]), &t, &g, 1.0, 0.5, &cf, 1, &w).unwrap();
        e.transcript_text()
    };
    let a = run();
    assert!(!a.is_empty());
    assert_eq!(a, run());
}

#[test]
fn phi_values_and_budget_counter() {
    let c = Phi::constant(0.25);
    assert_eq!(c.eval(&pt(&[1.0])).unwrap(), 0.25);
    let b = Budget::new(3);
    for _ in 0..3 {
        b.charge().unwrap();
    }
    assert!(b.charge().is_err());
    assert_eq!(b.used(), 3);
    assert_eq!(BigUint::from(b.limit()), BigUint::from(3u32));
}
