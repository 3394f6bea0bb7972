//! Built-in instances shared by the harness, the CLI defaults and the tests.

use crate::hilbert::{HilbertError, Matrix, OperatorKind, OperatorSpec, Point};
use crate::schedules::Schedule;

/// One nonexpansive `T` with a contraction `G`.
#[derive(Clone, Debug)]
pub struct SingleInstance {
    pub label: String,
    pub t: OperatorSpec,
    pub g: OperatorSpec,
    pub tau: f64,
    pub d: u64,
    /// A fixed point of `T`.
    pub witness: Point,
    pub start: Point,
    pub schedule: Schedule,
    /// The VIP solution when it is known in closed form.
    pub solution: Option<Point>,
}

/// A family `T_1, …, T_N` with a common fixed point.
#[derive(Clone, Debug)]
pub struct FamilyInstance {
    pub label: String,
    pub ops: Vec<OperatorSpec>,
    pub g: OperatorSpec,
    pub tau: f64,
    pub d: u64,
    pub witness: Point,
    pub start: Point,
    pub schedule: Schedule,
}

pub fn pt(c: &[f64]) -> Point {
    Point::new(c.to_vec()).expect("finite literal")
}

pub fn ball(center: &[f64], radius: f64) -> OperatorKind {
    OperatorKind::ProjectBall { center: pt(center), radius }
}

pub fn halfspace(normal: &[f64], offset: f64) -> OperatorKind {
    OperatorKind::ProjectHalfspace { normal: pt(normal), offset }
}

pub fn line(direction: &[f64]) -> OperatorKind {
    OperatorKind::ProjectAffine { basis: vec![pt(direction)], shift: Point::zeros(direction.len()) }
}

/// `G(x) = a + τ(x − a)`: the map `I − F` for `F(x) = (1−τ)(x − a)`.
pub fn attractor(a: &Point, tau: f64) -> Result<OperatorSpec, HilbertError> {
    if tau == 0.0 {
        OperatorSpec::contraction(OperatorKind::ConstantMap { point: a.clone() }, 0.0)
    } else {
        OperatorSpec::contraction(
            OperatorKind::AffineMap { matrix: Matrix::scaled_identity(a.dim(), tau), shift: a.scale(1.0 - tau) },
            tau,
        )
    }
}

/// Projection onto `B(0, r)` with `F(x) = x − a`, `μ = 1`; the VIP solution is `P_B a`.
pub fn quadratic_ball(a: &[f64], radius: f64, tau: f64, schedule: Schedule) -> Result<SingleInstance, HilbertError> {
    let dim = a.len();
    let a = pt(a);
    let t = OperatorSpec::nonexpansive(OperatorKind::ProjectBall { center: Point::zeros(dim), radius })?;
    let n = a.norm();
    let solution = if n <= radius { a.clone() } else { a.scale(radius / n) };
    Ok(SingleInstance {
        label: format!("quadratic-ball(a = {a}, r = {radius}, tau = {tau})"),
        t,
        g: attractor(&a, tau)?,
        tau,
        d: 1,
        witness: Point::zeros(dim),
        start: Point::zeros(dim),
        schedule,
        solution: Some(solution),
    })
}

/// The quadratic instance with `a` interior, `τ = 0`, `λ_n = (n+1)^{−1/2}`.
pub fn quadratic_interior() -> SingleInstance {
    let s = Schedule::power(0.5).expect("valid schedule");
    let mut inst = quadratic_ball(&[0.2, 0.1], 0.5, 0.0, s).expect("valid instance");
    inst.start = pt(&[-0.2, 0.2]);
    inst
}

/// Tower-audit instance: `T = P_{B(0, 1/2)}`, `a = (0.7, 0.3)` outside the ball.
pub fn audit_instance(tau: f64) -> Result<SingleInstance, HilbertError> {
    let s = Schedule::power(0.5).expect("valid schedule");
    let mut inst = quadratic_ball(&[0.7, 0.3], 0.5, tau, s)?;
    inst.start = pt(&[-0.3, 0.2]);
    inst.label = format!("audit(tau = {tau})");
    Ok(inst)
}

/// `T_1 = P_{B(0, 1/2)}`, `T_2 = P_{x ≤ 0}`, `G(x) = a + (x − a)/2` with `a` outside `x ≤ 0`.
pub fn two_projection_family() -> FamilyInstance {
    let ops = vec![
        OperatorSpec::nonexpansive(ball(&[0.0, 0.0], 0.5)).expect("valid ball"),
        OperatorSpec::nonexpansive(halfspace(&[1.0, 0.0], 0.0)).expect("valid halfspace"),
    ];
    let a = pt(&[0.1, 0.05]);
    FamilyInstance {
        label: "two-projection".into(),
        ops,
        g: attractor(&a, 0.5).expect("valid contraction"),
        tau: 0.5,
        d: 1,
        witness: Point::zeros(2),
        start: pt(&[0.2, 0.1]),
        schedule: Schedule::power(1.0).and_then(|s| s.with_period(2)).expect("valid schedule"),
    }
}
