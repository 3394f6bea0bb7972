use hsdm::schedules::*;
use proptest::prelude::*;

fn schedules() -> Vec<Schedule> {
    vec![
        Schedule::power(0.5).unwrap(),
        Schedule::power(1.0).unwrap(),
        Schedule::power(0.75).unwrap(),
        Schedule::scaled_power(0.5, 0.5).unwrap(),
        Schedule::scaled_power(0.8, 1.0).unwrap(),
    ]
}

#[test]
fn lambda_is_c_over_power() {
    let s = Schedule::scaled_power(0.5, 0.5).unwrap();
    assert_eq!(s.lambda(0), 0.5);
    assert!((s.lambda(3) - 0.25).abs() < 1e-16);
    let h = Schedule::power(1.0).unwrap();
    assert_eq!(h.lambda(9), 0.1);
}

#[test]
fn invalid_parameters_are_rejected() {
    assert_eq!(Schedule::power(0.0), Err(ScheduleError::BadExponent(0.0)));
    assert_eq!(Schedule::power(1.5), Err(ScheduleError::BadExponent(1.5)));
    assert_eq!(Schedule::scaled_power(1.5, 0.5), Err(ScheduleError::BadScale(1.5)));
    assert_eq!(Schedule::power(0.5).unwrap().with_period(0), Err(ScheduleError::BadPeriod));
}

#[test]
fn schedule_serde_shape() {
    let s: Schedule = serde_json::from_str(r#"{"kind": "scaled_power", "c": 0.5, "rho": 0.5}"#).unwrap();
    assert_eq!(s, Schedule::scaled_power(0.5, 0.5).unwrap());
    assert_eq!(s.period(), 1);
    let t: Schedule = serde_json::from_str(r#"{"kind": "power", "rho": 1.0, "period": 2}"#).unwrap();
    assert_eq!(t.period(), 2);
    let back: Schedule = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
    assert_eq!(back, t);
    assert!(serde_json::from_str::<Schedule>(r#"{"kind": "power", "rho": 2.0}"#).is_err());
}

#[test]
fn h_is_the_least_reciprocal_bound() {
    for s in schedules() {
        for n in [0u64, 1, 5, 17, 100, 1234] {
            let h = s.h(n).unwrap();
            let lam = s.lambda(n);
            assert!(lam >= 1.0 / h as f64);
            assert!(h == 1 || lam < 1.0 / (h - 1) as f64, "{s} n = {n}: h = {h} not least");
        }
    }
}

#[test]
fn chi_matches_a_linear_scan() {
    for s in schedules() {
        for k in [0u64, 1, 2, 7, 30] {
            let thr = 1.0 / (k as f64 + 1.0);
            let scan = (0u64..).find(|&i| s.lambda(i) <= thr).unwrap();
            assert_eq!(s.chi(k).unwrap(), scan, "{s} k = {k}");
        }
    }
}

#[test]
fn phi1_reaches_the_partial_sum() {
    for s in schedules() {
        for k in [0.5, 1.0, 3.0, 6.0] {
            let m = s.phi1(k).unwrap();
            let sum: f64 = (1..=m).map(|i| s.lambda(i)).sum();
            assert!(sum >= k, "{s} k = {k}: sum {sum} at m = {m}");
        }
    }
}

#[test]
fn phi2_exists_only_below_rho_one() {
    let s = Schedule::power(0.5).unwrap();
    for eps in [0.5, 0.1, 0.02] {
        let n = s.phi2(eps).unwrap();
        for j in n..n + 2000 {
            let (a, b) = (s.lambda(j), s.lambda(j + 1));
            assert!((a - b) / (b * b) <= eps + 1e-12, "j = {j}");
        }
    }
    let e = Schedule::power(1.0).unwrap().phi2(0.1).unwrap_err();
    assert!(matches!(e, ModulusError::NoModulus { kind: "phi2", .. }));
}

#[test]
fn phi3_bounds_the_tail_products() {
    for s in schedules() {
        for (eps, n, tau) in [(0.5, 0, 0.0), (0.1, 3, 0.25), (0.2, 10, 0.5)] {
            let m = s.phi3(eps, n, tau).unwrap();
            assert!(m >= n);
            let mut prod = 1.0;
            for i in n..=m + 500 {
                prod *= 1.0 - s.lambda(i) * (1.0 - tau);
                if i >= m {
                    assert!(prod <= eps + 1e-12, "{s}: product {prod} at {i} with m = {m}");
                }
            }
        }
    }
    assert!(Schedule::power(0.5).unwrap().phi3(0.1, 0, 1.0).is_err());
}

#[test]
fn phi4_is_the_least_tail_index() {
    let s = Schedule::power(1.0).unwrap().with_period(2).unwrap();
    for eps in [0.5, 0.1, 0.05] {
        let m = s.phi4(eps).unwrap();
        let scan = (0u64..).find(|&i| 2.0 * s.lambda(i) <= eps).unwrap();
        assert_eq!(m, scan);
    }
}

#[test]
fn verify_modulus_confirms_analytic_values_and_catches_bad_claims() {
    let s = Schedule::power(0.5).unwrap();
    for q in [
        ModulusQuery::Chi { k: 5 },
        ModulusQuery::Phi1 { k: 4.0 },
        ModulusQuery::Phi2 { eps: 0.2 },
        ModulusQuery::Phi3 { eps: 0.3, n: 2, tau: 0.0 },
        ModulusQuery::Phi4 { eps: 0.25 },
        ModulusQuery::H { n: 10 },
    ] {
        assert!(verify_modulus(&s, q, None, 5000).unwrap().is_verified(), "{q:?}");
    }
    let chi = s.chi(5).unwrap();
    assert!(matches!(verify_modulus(&s, ModulusQuery::Chi { k: 5 }, Some(chi - 1), 5000), Ok(Verification::Counterexample(_))));
}

#[test]
fn bundle_delegates_and_allows_replacements() {
    let s = Schedule::power(0.5).unwrap();
    let b = s.moduli(0.25);
    assert_eq!(b.chi(4).unwrap(), s.chi(4).unwrap());
    assert_eq!(b.phi3(0.1, 2).unwrap(), s.phi3(0.1, 2, 0.25).unwrap());
    let b2 = b.with_chi(std::sync::Arc::new(|k| Ok(k + 100)));
    assert_eq!(b2.chi(4).unwrap(), 104);
}

proptest! {
    #[test]
    fn chi_is_nondecreasing(rho in 0.3f64..=1.0, k in 0u64..500) {
        let s = Schedule::power(rho).unwrap();
        prop_assert!(s.chi(k).unwrap() <= s.chi(k + 1).unwrap());
    }

    #[test]
    fn lambda_is_decreasing_and_in_unit_interval(rho in 0.1f64..=1.0, c in 0.1f64..=1.0, n in 0u64..100_000) {
        let s = Schedule::scaled_power(c, rho).unwrap();
        let (a, b) = (s.lambda(n), s.lambda(n + 1));
        prop_assert!(a > 0.0 && a <= 1.0 && b < a);
    }
}
