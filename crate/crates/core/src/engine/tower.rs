use std::cell::{Cell, RefCell};
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use thiserror::Error;

use super::params::{tower_params, TowerParams};
use super::{admits, Counterfunctions, Engine, EngineError, Phi, AUDIT_SLACK};
use crate::hilbert::{OperatorSpec, Point, FIXED_POINT_TOL};

const A_SLACK: f64 = 1e-12;

/// `‖u−p‖² ≤ ε̃⁴/8d² + ‖(1−s)u + s v − p‖²` with `s = ε̃²/6d²`.
pub fn a_predicate(eps_tilde: f64, u: &Point, v: &Point, p: &Point, d: u64) -> bool {
    let d2 = (d * d) as f64;
    let e2 = eps_tilde * eps_tilde;
    let s = e2 / (6.0 * d2);
    let lhs = u.dist_sq(p);
    let rhs = e2 * e2 / (8.0 * d2) + u.lerp(v, s).dist_sq(p);
    lhs <= rhs + A_SLACK
}

/// One link `u_{i−1}, u_i, u_{i+1}` of the approximate Picard chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainRecord {
    pub i: u64,
    /// `A(ε̃, u_{i+1}, u_i, G u_i)`.
    pub eins: bool,
    /// `A(ε̃, u_i, u_{i+1}, G u_{i−1})`.
    pub zwei: bool,
    pub step: f64,
    pub prev_step: f64,
    /// `step < τ·prev_step + ε̃`; meaningful when both predicates hold.
    pub contraction_ok: bool,
    /// `step < τ^i‖u_1−u_0‖ + ε̃Σ_{k<i} τ^k`.
    pub telescoped_ok: bool,
}

#[derive(Clone, Debug)]
pub struct TowerTrace {
    pub params: TowerParams,
    /// `u_0, …, u_{i₀}` as far as computed.
    pub points: Vec<Point>,
    pub chain: Vec<ChainRecord>,
    /// `A(ε̃, u_0, u_1, p)`.
    pub initial: Option<bool>,
    pub evaluations: u64,
    pub projections: u64,
    pub memo_hits: u64,
}

#[derive(Clone, Debug)]
pub struct TowerResult {
    pub u_star: Point,
    pub phi: Phi,
    pub trace: TowerTrace,
}

#[derive(Clone, Debug, Error)]
#[error("{error}")]
pub struct TowerFailure {
    pub error: EngineError,
    pub trace: Option<TowerTrace>,
}

impl From<EngineError> for TowerFailure {
    fn from(error: EngineError) -> Self {
        TowerFailure { error, trace: None }
    }
}

type MemoKey = (u64, u64, u64);

struct TowerCtx {
    engine: Engine,
    t_op: OperatorSpec,
    g: OperatorSpec,
    params: TowerParams,
    t_top: f64,
    cf_top: Counterfunctions,
    fallback: Point,
    memo: RefCell<HashMap<MemoKey, (Point, Phi)>>,
    projections: Cell<u64>,
    hits: Cell<u64>,
}

/// `Δ(v, ψ) = φ(v)`, `V ≡ u`.
fn echo_cf(phi: Phi, u: Point) -> Counterfunctions {
    Counterfunctions::new("echo", move |v, _| phi.eval(v), move |_, _| Ok(u.clone()))
}

impl TowerCtx {
    fn start_point(&self, v0: &Point) -> Point {
        match self.t_op.nearest_fixed_point(v0) {
            Ok(p) if self.t_op.eval(&p).dist(&p) <= FIXED_POINT_TOL => p,
            _ => self.fallback.clone(),
        }
    }

    fn weight_above(&self, i: u64) -> f64 {
        if i + 1 == self.params.i0 {
            self.t_top
        } else {
            self.params.weight
        }
    }

    fn level_cf(self: &Rc<Self>, i: u64) -> Counterfunctions {
        if i == self.params.i0 {
            return self.cf_top.clone();
        }
        let a = Rc::clone(self);
        let b = Rc::clone(self);
        Counterfunctions::new(
            format!("tower[{i}]"),
            move |u, phi| {
                let (_, ph) = a.solve(i, u, phi)?;
                ph.eval(u)
            },
            move |u, phi| Ok(b.solve(i, u, phi)?.0),
        )
    }

    /// The pair projection of `Gu` defining `V_i(u, φ)` and `Δ_i(u, φ)`.
    fn solve(self: &Rc<Self>, i: u64, u: &Point, phi: &Phi) -> Result<(Point, Phi), EngineError> {
        let key = (i, u.bit_hash(), phi.id());
        if let Some(hit) = self.memo.borrow().get(&key) {
            self.hits.set(self.hits.get() + 1);
            return Ok(hit.clone());
        }
        let v0 = self.g.eval(u);
        let branches = vec![
            (self.level_cf(i + 1), self.weight_above(i)),
            (echo_cf(phi.clone(), u.clone()), self.params.weight),
        ];
        let start = self.start_point(&v0);
        let res = self.engine.project_at(i as usize, &v0, &self.t_op, branches, self.params.acc, &start, self.params.d)?;
        self.projections.set(self.projections.get() + 1);
        let out = (res.u, res.phi);
        self.memo.borrow_mut().insert(key, out.clone());
        Ok(out)
    }
}

impl fmt::Debug for TowerCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TowerCtx").field("params", &self.params).finish()
    }
}

fn build_chain(params: &TowerParams, g: &OperatorSpec, p: &Point, pts: &[Point]) -> (Option<bool>, Vec<ChainRecord>) {
    let et = params.eps_tilde;
    let tau = params.tau;
    let d = params.d;
    let initial = (pts.len() >= 2).then(|| a_predicate(et, &pts[0], &pts[1], p, d));
    let mut chain = Vec::new();
    if pts.len() < 3 {
        return (initial, chain);
    }
    let first = pts[1].dist(&pts[0]);
    for i in 1..pts.len() - 1 {
        let step = pts[i + 1].dist(&pts[i]);
        let prev = pts[i].dist(&pts[i - 1]);
        let eins = a_predicate(et, &pts[i + 1], &pts[i], &g.eval(&pts[i]), d);
        let zwei = a_predicate(et, &pts[i], &pts[i + 1], &g.eval(&pts[i - 1]), d);
        let geo: f64 = (0..i).map(|k| tau.powi(k as i32)).sum();
        chain.push(ChainRecord {
            i: i as u64,
            eins,
            zwei,
            step,
            prev_step: prev,
            contraction_ok: step < tau * prev + et + AUDIT_SLACK,
            telescoped_ok: step < tau.powi(i as i32) * first + et * geo + AUDIT_SLACK,
        });
    }
    (initial, chain)
}

impl Engine {
    /// Solves the ε-fixed-point problem of `P_{fix T} ∘ G` against `(Δ, V)`.
    #[allow(clippy::too_many_arguments)]
    pub fn picard_tower(
        &self,
        p: &Point,
        t_op: &OperatorSpec,
        g: &OperatorSpec,
        eps: f64,
        t: f64,
        cf: &Counterfunctions,
        d: u64,
        witness: &Point,
    ) -> Result<TowerResult, TowerFailure> {
        let tau = g
            .tau()
            .ok_or_else(|| EngineError::InvalidArgument("G must claim a contraction factor".into()))?;
        if !(0.0..=1.0).contains(&t) {
            return Err(EngineError::OutOfRange { what: "t", value: t }.into());
        }
        let params = tower_params(eps, tau, d)?;
        let ctx = Rc::new(TowerCtx {
            engine: self.clone(),
            t_op: t_op.clone(),
            g: g.clone(),
            params: params.clone(),
            t_top: t,
            cf_top: cf.clone(),
            fallback: witness.clone(),
            memo: RefCell::new(HashMap::new()),
            projections: Cell::new(0),
            hits: Cell::new(0),
        });
        let mut points: Vec<Point> = Vec::new();
        let run = |points: &mut Vec<Point>| -> Result<Phi, EngineError> {
            let start = ctx.start_point(p);
            let first = self.project_at(
                0,
                p,
                t_op,
                vec![(ctx.level_cf(0), params.weight)],
                params.acc,
                &start,
                d,
            )?;
            ctx.projections.set(ctx.projections.get() + 1);
            points.push(first.u);
            let mut phi = first.phi;
            for i in 1..=params.i0 {
                let prev = points.last().expect("u_0 computed").clone();
                let (u, ph) = ctx.solve(i - 1, &prev, &phi)?;
                points.push(u);
                phi = ph;
            }
            Ok(phi)
        };
        let outcome = run(&mut points);
        let (initial, chain) = build_chain(&params, g, p, &points);
        let trace = TowerTrace {
            params,
            points,
            chain,
            initial,
            evaluations: self.budget().used(),
            projections: ctx.projections.get(),
            memo_hits: ctx.hits.get(),
        };
        ctx.memo.borrow_mut().clear();
        match outcome {
            Ok(phi) => Ok(TowerResult {
                u_star: trace.points.last().expect("u_{i0}").clone(),
                phi,
                trace,
            }),
            Err(error) => Err(TowerFailure { error, trace: Some(trace) }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditReport {
    pub residual: f64,
    pub delta: f64,
    pub fixed_point_ok: bool,
    pub premise: bool,
    /// `‖Gu−u‖²`.
    pub lhs: f64,
    /// `‖Gu−V^t‖² + ε`.
    pub rhs: f64,
    pub implication_ok: bool,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.fixed_point_ok && self.implication_ok
    }
}

/// Re-evaluates both conjuncts of the problem against the original `(Δ, V)`.
pub fn audit(
    res: &TowerResult,
    t_op: &OperatorSpec,
    g: &OperatorSpec,
    cf: &Counterfunctions,
    t: f64,
    eps: f64,
) -> Result<AuditReport, EngineError> {
    let u = &res.u_star;
    let delta = (cf.delta)(u, &res.phi)?;
    let residual = t_op.eval(u).dist(u);
    let fixed_point_ok = admits(delta, residual) || residual <= delta + AUDIT_SLACK;
    let w = (cf.v)(u, &res.phi)?;
    let premise = admits(res.phi.eval(&w)?, t_op.eval(&w).dist(&w));
    let gu = g.eval(u);
    let lhs = gu.dist_sq(u);
    let rhs = gu.dist_sq(&u.lerp(&w, t)) + eps;
    Ok(AuditReport {
        residual,
        delta,
        fixed_point_ok,
        premise,
        lhs,
        rhs,
        implication_ok: !premise || lhs < rhs + AUDIT_SLACK,
    })
}
