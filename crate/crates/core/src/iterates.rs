//! Iteration schemes (hybrid steepest descent, cyclic variant, viscosity,
//! projected gradient) and the resolvent path `v_n = (1−λ_n)Tv_n + λ_n G T v_n`.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hilbert::{HilbertError, OperatorSpec, Point};
use crate::schedules::Schedule;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IterateError {
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error("iteration diverged at step {step}")]
    Divergence { step: usize },
    #[error("operator G does not claim a contraction factor")]
    NotContraction,
    #[error("resolvent solver stalled after {iterations} iterations with residual {residual}")]
    NonConvergence { iterations: u64, residual: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("window index {index} beyond trajectory of length {len}")]
    WindowOutOfRange { index: usize, len: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// `u_{n+1} = (1−λ)Tu_n + λ G(Tu_n)`.
    HsdmSingle,
    /// As `HsdmSingle` with `T_{[n+1]}` cycling through the family.
    HsdmCyclic,
    /// `u_{n+1} = λ f(u_n) + (1−λ)Tu_n`.
    Viscosity,
    /// `u_{n+1} = λ f(Tu_n) + (1−λ)Tu_n`.
    ViscosityImage,
    /// `u_{n+1} = P_S(G u_n)`.
    ProjGrad,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::HsdmSingle,
        Scheme::HsdmCyclic,
        Scheme::Viscosity,
        Scheme::ViscosityImage,
        Scheme::ProjGrad,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::HsdmSingle => "hsdm-single",
            Scheme::HsdmCyclic => "hsdm-cyclic",
            Scheme::Viscosity => "viscosity",
            Scheme::ViscosityImage => "viscosity-image",
            Scheme::ProjGrad => "proj-grad",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = IterateError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == norm)
            .ok_or_else(|| IterateError::InvalidArgument(format!("unknown scheme '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub points: Vec<Point>,
    /// `lambdas[n]` is `λ_n`; for `n ≥ 1` it is the weight that produced `points[n]`.
    pub lambdas: Vec<f64>,
    /// `residuals[n] = ‖T_{[n]} u_{n−1} − u_n‖`, with `residuals[0] = 0`.
    pub residuals: Vec<f64>,
    pub scheme: Scheme,
    pub schedule: Schedule,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> &Point {
        self.points.last().expect("trajectory holds the starting point")
    }

    /// Writes `n,lambda,x0..x{m-1},residual` rows.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(w);
        let m = self.points.first().map(|p| p.dim()).unwrap_or(0);
        let mut header = vec!["n".to_string(), "lambda".to_string()];
        header.extend((0..m).map(|i| format!("x{i}")));
        header.push("residual".to_string());
        wtr.write_record(&header)?;
        for (n, p) in self.points.iter().enumerate() {
            let mut row = vec![n.to_string(), format!("{:e}", self.lambdas[n])];
            row.extend(p.coords().iter().map(|c| format!("{c:e}")));
            row.push(format!("{:e}", self.residuals[n]));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn check_dims(ops: &[&OperatorSpec], dim: usize) -> Result<(), IterateError> {
    for op in ops {
        if let Some(d) = op.dim() {
            if d != dim {
                return Err(HilbertError::DimensionMismatch { expected: d, found: dim }.into());
            }
        }
    }
    Ok(())
}

/// Runs `steps` iterations of `scheme` from `u0`.
pub fn iterate(
    scheme: Scheme,
    ops: &[OperatorSpec],
    g: &OperatorSpec,
    s: &Schedule,
    u0: &Point,
    steps: usize,
) -> Result<Trajectory, IterateError> {
    if ops.is_empty() {
        return Err(IterateError::InvalidArgument("no operators supplied".into()));
    }
    if scheme != Scheme::HsdmCyclic && ops.len() != 1 {
        return Err(IterateError::InvalidArgument(format!(
            "{scheme} takes one operator, got {}",
            ops.len()
        )));
    }
    let mut all: Vec<&OperatorSpec> = ops.iter().collect();
    all.push(g);
    check_dims(&all, u0.dim())?;

    let n_ops = ops.len();
    let mut points = Vec::with_capacity(steps + 1);
    let mut lambdas = Vec::with_capacity(steps + 1);
    let mut residuals = Vec::with_capacity(steps + 1);
    points.push(u0.clone());
    lambdas.push(s.lambda(0));
    residuals.push(0.0);

    let mut u = u0.clone();
    for n in 0..steps {
        let lam = s.lambda(n as u64 + 1);
        let t = &ops[n % n_ops];
        let tu = t.eval(&u);
        let next = match scheme {
            Scheme::HsdmSingle | Scheme::HsdmCyclic | Scheme::ViscosityImage => {
                tu.lerp(&g.eval(&tu), lam)
            }
            Scheme::Viscosity => tu.lerp(&g.eval(&u), lam),
            Scheme::ProjGrad => t.eval(&g.eval(&u)),
        };
        if !next.is_finite() {
            return Err(IterateError::Divergence { step: n + 1 });
        }
        residuals.push(tu.dist(&next));
        lambdas.push(lam);
        points.push(next.clone());
        u = next;
    }
    Ok(Trajectory { points, lambdas, residuals, scheme, schedule: *s })
}

/// `T^{(λ)}(x) = (1−λ)Tx + λ G(Tx)`.
pub fn resolvent_map(t: &OperatorSpec, g: &OperatorSpec, lam: f64, x: &Point) -> Point {
    let tx = t.eval(x);
    tx.lerp(&g.eval(&tx), lam)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResolventPoint {
    pub point: Point,
    pub iterations: u64,
    pub residual: f64,
    pub a_priori_bound: u64,
}

/// Banach iteration of `T^{(λ)}` until `‖v − T^{(λ)}v‖ ≤ tol`.
pub fn resolvent_point(
    t: &OperatorSpec,
    g: &OperatorSpec,
    lam: f64,
    tol: f64,
    start: Option<&Point>,
) -> Result<ResolventPoint, IterateError> {
    let tau = g.tau().ok_or(IterateError::NotContraction)?;
    if !(lam > 0.0 && lam <= 1.0) {
        return Err(IterateError::InvalidArgument(format!("lambda = {lam} outside (0, 1]")));
    }
    if !(tol > 0.0) {
        return Err(IterateError::InvalidArgument(format!("tol = {tol} must be positive")));
    }
    let dim = t
        .dim()
        .or(g.dim())
        .or(start.map(|p| p.dim()))
        .ok_or_else(|| IterateError::InvalidArgument("dimension unknown".into()))?;
    let x0 = match start {
        Some(p) => p.clone(),
        None => t.witness().cloned().unwrap_or_else(|| Point::zeros(dim)),
    };
    check_dims(&[t, g], x0.dim())?;

    let rate = lam * (1.0 - tau);
    let q = 1.0 - rate;
    let mut x = x0;
    let mut next = resolvent_map(t, g, lam, &x);
    let d0 = x.dist(&next);
    if d0 <= tol {
        return Ok(ResolventPoint { point: x, iterations: 0, residual: d0, a_priori_bound: 0 });
    }
    if !(q < 1.0) {
        return Err(IterateError::InvalidArgument(format!(
            "contraction factor 1 − λ(1−τ) rounds to 1 (λ = {lam}, τ = {tau})"
        )));
    }
    let bound = ((tol * rate / d0).ln() / q.ln()).ceil().max(1.0);
    let limit = (10.0 * bound + 10.0).min(1e12) as u64;
    let mut k = 0u64;
    loop {
        x = next;
        next = resolvent_map(t, g, lam, &x);
        k += 1;
        let r = x.dist(&next);
        if !next.is_finite() {
            return Err(IterateError::NonConvergence { iterations: k, residual: f64::INFINITY });
        }
        if r <= tol {
            return Ok(ResolventPoint {
                point: x,
                iterations: k,
                residual: r,
                a_priori_bound: bound as u64,
            });
        }
        if k >= limit {
            return Err(IterateError::NonConvergence { iterations: k, residual: r });
        }
    }
}

/// `v_n` for each requested index, warm-started from the previous solution.
pub fn resolvent_path(
    t: &OperatorSpec,
    g: &OperatorSpec,
    s: &Schedule,
    indices: &[u64],
    tol: f64,
) -> Result<Vec<Point>, IterateError> {
    let mut out = Vec::with_capacity(indices.len());
    let mut prev: Option<Point> = None;
    for &n in indices {
        let v = resolvent_point(t, g, s.lambda(n), tol, prev.as_ref())?;
        prev = Some(v.point.clone());
        out.push(v.point);
    }
    Ok(out)
}

/// Lazily computed and memoized resolvent path.
#[derive(Debug)]
pub struct ResolventPath {
    t: OperatorSpec,
    g: OperatorSpec,
    schedule: Schedule,
    tol: f64,
    cache: RefCell<BTreeMap<u64, Point>>,
}

impl ResolventPath {
    pub fn new(
        t: OperatorSpec,
        g: OperatorSpec,
        schedule: Schedule,
        tol: f64,
    ) -> Result<Self, IterateError> {
        if g.tau().is_none() {
            return Err(IterateError::NotContraction);
        }
        Ok(ResolventPath { t, g, schedule, tol, cache: RefCell::new(BTreeMap::new()) })
    }

    pub fn t(&self) -> &OperatorSpec {
        &self.t
    }

    pub fn g(&self) -> &OperatorSpec {
        &self.g
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn get(&self, n: u64) -> Result<Point, IterateError> {
        if let Some(p) = self.cache.borrow().get(&n) {
            return Ok(p.clone());
        }
        let warm = {
            let c = self.cache.borrow();
            let below = c.range(..n).next_back().map(|(k, v)| (n - k, v.clone()));
            let above = c.range(n..).next().map(|(k, v)| (k - n, v.clone()));
            match (below, above) {
                (Some(b), Some(a)) => Some(if b.0 <= a.0 { b.1 } else { a.1 }),
                (Some(b), None) => Some(b.1),
                (None, Some(a)) => Some(a.1),
                (None, None) => None,
            }
        };
        let v = resolvent_point(&self.t, &self.g, self.schedule.lambda(n), self.tol, warm.as_ref())?;
        self.cache.borrow_mut().insert(n, v.point.clone());
        Ok(v.point)
    }

    pub fn computed(&self) -> usize {
        self.cache.borrow().len()
    }
}

/// `T_{[n+N]} ⋯ T_{[n+1]} x`, applying `ops[n mod N]` first.
pub fn cyclic_composite(ops: &[OperatorSpec], n: usize, x: &Point) -> Point {
    let k = ops.len();
    (0..k).fold(x.clone(), |acc, j| ops[(n + j) % k].eval(&acc))
}

/// `‖u_n − T_{[n+N]} ⋯ T_{[n+1]} u_n‖` for each `n` in `window`.
pub fn asymptotic_residuals(
    traj: &Trajectory,
    ops: &[OperatorSpec],
    window: &[usize],
) -> Result<Vec<f64>, IterateError> {
    if ops.is_empty() {
        return Err(IterateError::InvalidArgument("no operators supplied".into()));
    }
    window
        .iter()
        .map(|&n| {
            let u = traj
                .points
                .get(n)
                .ok_or(IterateError::WindowOutOfRange { index: n, len: traj.len() })?;
            Ok(u.dist(&cyclic_composite(ops, n, u)))
        })
        .collect()
}
