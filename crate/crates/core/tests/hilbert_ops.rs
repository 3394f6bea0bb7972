use hsdm::hilbert::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn p(c: &[f64]) -> Point {
    Point::new(c.to_vec()).unwrap()
}

fn ne(kind: OperatorKind) -> OperatorSpec {
    OperatorSpec::nonexpansive(kind).unwrap()
}

fn close(a: &Point, b: &[f64], tol: f64) -> bool {
    a.coords().iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn points_reject_bad_coordinates() {
    assert_eq!(Point::new(vec![]), Err(HilbertError::EmptyPoint));
    assert_eq!(Point::new(vec![1.0, f64::NAN]), Err(HilbertError::NonFinite { index: 1 }));
    assert!(matches!(inner(&p(&[1.0]), &p(&[1.0, 2.0])), Err(HilbertError::DimensionMismatch { .. })));
    assert_eq!(inner(&p(&[1.0, 2.0]), &p(&[3.0, -1.0])).unwrap(), 1.0);
}

#[test]
fn ball_projection_matches_radial_formula() {
    let op = ne(OperatorKind::ProjectBall { center: p(&[1.0, -1.0]), radius: 2.0 });
    let x = p(&[4.0, 3.0]);
    // x − c = (3, 4), length 5
    let y = op.apply(&x).unwrap();
    assert!(close(&y, &[1.0 + 6.0 / 5.0, -1.0 + 8.0 / 5.0], 1e-15));
    let inside = p(&[1.5, -0.5]);
    assert_eq!(op.apply(&inside).unwrap(), inside);
}

#[test]
fn halfspace_box_and_affine_projections() {
    let h = ne(OperatorKind::ProjectHalfspace { normal: p(&[3.0, 4.0]), offset: 5.0 });
    // <(3,4), (3,4)> = 25, so the excess is 20 and the step is 20/25
    assert!(close(&h.apply(&p(&[3.0, 4.0])).unwrap(), &[3.0 - 2.4, 4.0 - 3.2], 1e-14));
    assert_eq!(h.apply(&p(&[0.0, 0.0])).unwrap(), p(&[0.0, 0.0]));

    let b = ne(OperatorKind::ProjectBox { lo: p(&[0.0, -1.0]), hi: p(&[1.0, 1.0]) });
    assert_eq!(b.apply(&p(&[2.0, -3.0])).unwrap(), p(&[1.0, -1.0]));

    let a = ne(OperatorKind::ProjectAffine { basis: vec![p(&[1.0, 1.0])], shift: p(&[0.0, 1.0]) });
    // onto the line (0,1) + s(1,1): s = <(2,0) − (0,1), (1,1)>/2 = 1/2
    assert!(close(&a.apply(&p(&[2.0, 0.0])).unwrap(), &[0.5, 1.5], 1e-12));
}

#[test]
fn compose_applies_the_last_entry_first() {
    let k = OperatorKind::Compose {
        ops: vec![
            OperatorKind::ProjectHalfspace { normal: p(&[1.0, 0.0]), offset: 0.0 },
            OperatorKind::ProjectBall { center: p(&[0.0, 0.0]), radius: 1.0 },
        ],
    };
    let op = ne(k);
    // ball first: (3, 4) -> (0.6, 0.8), then x ≤ 0 -> (0, 0.8)
    assert!(close(&op.apply(&p(&[3.0, 4.0])).unwrap(), &[0.0, 0.8], 1e-15));
}

#[test]
fn convex_combination_and_affine_maps() {
    let k = OperatorKind::ConvexCombine {
        weight: 0.25,
        left: Box::new(OperatorKind::Identity),
        right: Box::new(OperatorKind::ConstantMap { point: p(&[4.0, 0.0]) }),
    };
    let op = OperatorSpec::new(k, ClaimedClass::Contraction { tau: 0.75 }, None).unwrap();
    assert!(close(&op.apply(&p(&[0.0, 4.0])).unwrap(), &[1.0, 3.0], 1e-15));
    assert_eq!(op.tau(), Some(0.75));
}

#[test]
fn false_claims_are_rejected() {
    let stretch = OperatorKind::AffineMap { matrix: Matrix::scaled_identity(2, 1.5), shift: Point::zeros(2) };
    assert!(matches!(OperatorSpec::nonexpansive(stretch.clone()), Err(HilbertError::ClaimViolated { .. })));
    let half = OperatorKind::AffineMap { matrix: Matrix::scaled_identity(2, 0.5), shift: Point::zeros(2) };
    assert!(OperatorSpec::contraction(half.clone(), 0.5).is_ok());
    assert!(matches!(OperatorSpec::contraction(half, 0.4), Err(HilbertError::ClaimViolated { .. })));
    assert!(matches!(
        OperatorSpec::contraction(OperatorKind::Identity, 1.0),
        Err(HilbertError::Malformed(_))
    ));
}

#[test]
fn witness_must_be_fixed() {
    let k = OperatorKind::ProjectBall { center: p(&[0.0, 0.0]), radius: 1.0 };
    assert!(OperatorSpec::new(k.clone(), ClaimedClass::Nonexpansive, Some(p(&[0.5, 0.0]))).is_ok());
    assert!(matches!(
        OperatorSpec::new(k, ClaimedClass::Nonexpansive, Some(p(&[2.0, 0.0]))),
        Err(HilbertError::WitnessNotFixed { .. })
    ));
}

#[test]
fn dimension_mismatch_is_reported() {
    let op = ne(OperatorKind::ProjectBall { center: p(&[0.0, 0.0]), radius: 1.0 });
    assert!(matches!(op.apply(&p(&[1.0, 2.0, 3.0])), Err(HilbertError::DimensionMismatch { .. })));
}

#[test]
fn nearest_fixed_point_of_a_composition_lies_in_both_sets() {
    let k = OperatorKind::Compose {
        ops: vec![
            OperatorKind::ProjectHalfspace { normal: p(&[1.0, 0.0]), offset: 0.0 },
            OperatorKind::ProjectBall { center: p(&[0.0, 0.0]), radius: 1.0 },
        ],
    };
    let op = ne(k);
    let y = op.nearest_fixed_point(&p(&[2.0, 2.0])).unwrap();
    assert!(y.coords()[0] <= 1e-9 && y.norm() <= 1.0 + 1e-9);
    assert!(fixed_point_residual(&op, &y).unwrap() <= 1e-9);
}

#[test]
fn operator_spec_round_trips_through_json() {
    let op = OperatorSpec::new(
        OperatorKind::ProjectHalfspace { normal: p(&[0.0, 1.0]), offset: 1.0 },
        ClaimedClass::Nonexpansive,
        Some(p(&[0.0, 0.0])),
    )
    .unwrap();
    let s = serde_json::to_string(&op).unwrap();
    let back: OperatorSpec = serde_json::from_str(&s).unwrap();
    assert_eq!(op, back);
    let bad = r#"{"op": {"kind": "project_ball", "center": [0.0], "radius": -1.0}, "class": "nonexpansive"}"#;
    assert!(serde_json::from_str::<OperatorSpec>(bad).is_err());
}

fn monotone(m: [[f64; 2]; 2], kappa: f64, eta: f64) -> MonotoneOpSpec {
    let map = MonotoneMap::Affine { matrix: Matrix::from_rows(m.iter().map(|r| r.to_vec()).collect()).unwrap(), shift: p(&[0.3, -0.2]) };
    MonotoneOpSpec::new(map, kappa, eta).unwrap()
}

#[test]
fn contraction_factor_matches_the_step_size_formula() {
    // F = diag(1, 2): κ = 2, η = 1; G = I − μF has factor max |1 − μλ_i|
    let f = monotone([[1.0, 0.0], [0.0, 2.0]], 2.0, 1.0);
    for mu in [0.1, 0.2, 0.3, 0.45] {
        let g = contraction_from_monotone(&f, mu).unwrap();
        let tau = g.tau().unwrap();
        let formula = (1.0 - mu * (2.0 - mu * 4.0)).sqrt();
        assert!((tau - formula).abs() < 1e-15);
        let exact = (1.0f64 - mu).abs().max((1.0 - 2.0 * mu).abs());
        assert!(exact <= tau + 1e-12, "mu = {mu}: {exact} > {tau}");
    }
    assert!(matches!(contraction_from_monotone(&f, 0.5), Err(HilbertError::InvalidStepSize { .. })));
    assert!(matches!(contraction_from_monotone(&f, 0.0), Err(HilbertError::InvalidStepSize { .. })));
}

#[test]
fn monotone_constants_are_validated() {
    let m = Matrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 3.0]]).unwrap();
    let map = MonotoneMap::Affine { matrix: m, shift: Point::zeros(2) };
    assert!(MonotoneOpSpec::new(map.clone(), 3.0, 1.0).is_ok());
    assert!(matches!(MonotoneOpSpec::new(map.clone(), 1.0, 2.0), Err(HilbertError::InvalidMonotone(_))));
    assert!(MonotoneOpSpec::new(map.clone(), 3.0, 1.0).unwrap().verify(200, 1).is_ok());
    // a claimed η above the true modulus 1 fails the sampled check
    assert!(matches!(MonotoneOpSpec::new(map, 3.0, 1.5), Err(HilbertError::InvalidMonotone(_))));
}

#[test]
fn quadratic_gradient_is_hessian_times_x_minus_linear() {
    let h = Matrix::from_rows(vec![vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let f = MonotoneOpSpec::new(MonotoneMap::QuadraticGradient { hessian: h, linear: p(&[1.0, 1.0]) }, 2.0, 1.0).unwrap();
    assert_eq!(f.apply(&p(&[1.0, 3.0])).unwrap(), p(&[1.0, 2.0]));
}

#[test]
fn sqne_chain_and_bauschke_moduli() {
    let rho = sqne_chain_modulus(vec![projection_sqne_modulus(); 2], std::sync::Arc::new(|e| e), 2).unwrap();
    // χ(0, ε) = min(ε/2, ε) = ε/2; χ(1, ε) = min(ω(d, ε/4), ε/4) with ω = x²/2d
    let e: f64 = 0.4;
    let want = ((e / 4.0).powi(2) / 2.0).min(e / 4.0);
    assert!((rho.eval(1, e).unwrap() - want).abs() < 1e-18);
    let b = bauschke_modulus(&rho, 2).unwrap();
    assert!((b.eval(1, e).unwrap() - rho.eval(1, e / 5.0).unwrap()).abs() < 1e-18);
    assert!(matches!(rho.eval(1, 0.0), Err(HilbertError::InvalidEpsilon(_))));
    assert!(matches!(ConditionModulus::identity(0), Err(HilbertError::EmptyFamily)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projections_are_firmly_nonexpansive(
        x in prop::collection::vec(-5.0f64..5.0, 3),
        y in prop::collection::vec(-5.0f64..5.0, 3),
        r in 0.1f64..3.0,
    ) {
        let ops = [
            ne(OperatorKind::ProjectBall { center: Point::zeros(3), radius: r }),
            ne(OperatorKind::ProjectHalfspace { normal: p(&[1.0, -2.0, 0.5]), offset: r }),
            ne(OperatorKind::ProjectBox { lo: p(&[-r, -r, -r]), hi: p(&[r, r, r]) }),
        ];
        let (x, y) = (p(&x), p(&y));
        for op in &ops {
            let (px, py) = (op.eval(&x), op.eval(&y));
            // ‖Px − Py‖² ≤ <Px − Py, x − y>
            let lhs = px.dist_sq(&py);
            let rhs = px.sub(&py).dot(&x.sub(&y));
            prop_assert!(lhs <= rhs + 1e-9);
            prop_assert!(op.eval(&px).dist(&px) <= 1e-12);
        }
    }

    #[test]
    fn contraction_ratio_stays_below_tau(kappa in 1.0f64..3.0, frac in 0.1f64..1.0, t in 0.05f64..0.95, seed in 0u64..1000) {
        let eta = kappa * frac;
        let mu = t * 2.0 * eta / (kappa * kappa);
        let m = [[eta, 0.0], [0.0, kappa]];
        let g = contraction_from_monotone(&monotone(m, kappa, eta), mu).unwrap();
        let tau = g.tau().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let x = p(&[rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]);
            let y = p(&[rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]);
            prop_assert!(g.eval(&x).dist(&g.eval(&y)) <= tau * x.dist(&y) + 1e-9);
        }
    }
}
