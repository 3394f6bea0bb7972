use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use super::{admits, Counterfunctions, Engine, EngineError, Phi, TranscriptEntry, AUDIT_SLACK};
use crate::hilbert::{HilbertError, OperatorSpec, Point, FIXED_POINT_TOL};

#[derive(Clone, Debug)]
pub struct EpsProjectionResult {
    pub u: Point,
    pub phi: Phi,
    /// 1-based index of the accepted candidate.
    pub index_used: u64,
    /// `n_ε = ⌈d²/ε⌉`.
    pub n_eps: u64,
    pub transcript: Option<Vec<TranscriptEntry>>,
}

struct Branch {
    cf: Counterfunctions,
    t: f64,
}

struct Selection {
    w: Point,
    t: f64,
    premise: bool,
    phi_w: f64,
    dist: f64,
}

struct ProjCtx {
    engine: Engine,
    level: usize,
    v0: Point,
    t_op: OperatorSpec,
    branches: Vec<Branch>,
    weights: Vec<f64>,
    sixteen_d: f64,
    /// `upper[j]` bounds `ψ_j` from above; the last entry is the first zero.
    upper: Vec<f64>,
    memo: RefCell<HashMap<(u64, u64), f64>>,
}

impl ProjCtx {
    fn upper(&self, j: u64) -> f64 {
        self.upper.get(j as usize).copied().unwrap_or(0.0)
    }

    fn residual(&self, x: &Point) -> f64 {
        self.t_op.eval(x).dist(x)
    }

    /// `ψ^u_j(v) = min_k ψ_j((1−t_k)u + t_k v)² / 16d`.
    fn make_phi(self: &Rc<Self>, u: Point, j: u64) -> Phi {
        let ctx = Rc::clone(self);
        Phi::new("psi", move |v| {
            if ctx.upper(j + 1) == 0.0 {
                return Ok(0.0);
            }
            let mut best = f64::INFINITY;
            for &t in &ctx.weights {
                let p = ctx.psi(j, &u.lerp(v, t))?;
                best = best.min(p * p / ctx.sixteen_d);
            }
            Ok(best)
        })
    }

    fn psi(self: &Rc<Self>, j: u64, x: &Point) -> Result<f64, EngineError> {
        if j == 0 {
            return Ok(1.0);
        }
        if self.upper(j) == 0.0 {
            return Ok(0.0);
        }
        let key = (j, x.bit_hash());
        if let Some(&v) = self.memo.borrow().get(&key) {
            return Ok(v);
        }
        let phi = self.make_phi(x.clone(), j - 1);
        let delta = self.delta(x, &phi)?;
        let sel = self.select(x, &phi)?;
        let val = delta.min(sel.phi_w);
        self.memo.borrow_mut().insert(key, val);
        Ok(val)
    }

    fn delta(&self, u: &Point, phi: &Phi) -> Result<f64, EngineError> {
        let mut m = f64::INFINITY;
        for b in &self.branches {
            m = m.min(self.engine.call_delta(self.level, &b.cf, u, phi)?);
        }
        Ok(m)
    }

    /// Among branches whose premise holds, the one with the closest `V^t`;
    /// if none holds, the closest overall. Ties go to the earlier branch.
    fn select(&self, u: &Point, phi: &Phi) -> Result<Selection, EngineError> {
        let mut cands = Vec::with_capacity(self.branches.len());
        for b in &self.branches {
            let w = self.engine.call_v(self.level, &b.cf, u, phi)?;
            let phi_w = phi.eval(&w)?;
            let premise = admits(phi_w, self.residual(&w));
            let dist = self.v0.dist(&u.lerp(&w, b.t));
            cands.push(Selection { w, t: b.t, premise, phi_w, dist });
        }
        let any = cands.iter().any(|c| c.premise);
        let mut best: Option<Selection> = None;
        for c in cands.into_iter().filter(|c| c.premise || !any) {
            if best.as_ref().map_or(true, |b| c.dist < b.dist) {
                best = Some(c);
            }
        }
        Ok(best.expect("at least one branch"))
    }
}

fn upper_bounds(sixteen_d: f64) -> Vec<f64> {
    let mut u = vec![1.0f64];
    loop {
        let last = *u.last().unwrap();
        if last == 0.0 {
            return u;
        }
        u.push(last * last / sixteen_d);
    }
}

impl Engine {
    /// ε-projection of `v0` onto `fix(T)` against one counterfunction pair.
    #[allow(clippy::too_many_arguments)]
    pub fn eps_projection(
        &self,
        v0: &Point,
        t_op: &OperatorSpec,
        t: f64,
        eps: f64,
        cf: &Counterfunctions,
        witness: &Point,
        d: u64,
    ) -> Result<EpsProjectionResult, EngineError> {
        self.project_at(0, v0, t_op, vec![(cf.clone(), t)], eps, witness, d)
    }

    /// ε-projection winning against two counterfunction pairs at once.
    #[allow(clippy::too_many_arguments)]
    pub fn eps_projection_pair(
        &self,
        v0: &Point,
        t_op: &OperatorSpec,
        t1: f64,
        t2: f64,
        eps: f64,
        cf1: &Counterfunctions,
        cf2: &Counterfunctions,
        witness: &Point,
        d: u64,
    ) -> Result<EpsProjectionResult, EngineError> {
        self.project_at(0, v0, t_op, vec![(cf1.clone(), t1), (cf2.clone(), t2)], eps, witness, d)
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn project_at(
        &self,
        level: usize,
        v0: &Point,
        t_op: &OperatorSpec,
        branches: Vec<(Counterfunctions, f64)>,
        eps: f64,
        witness: &Point,
        d: u64,
    ) -> Result<EpsProjectionResult, EngineError> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(EngineError::OutOfRange { what: "eps", value: eps });
        }
        if d == 0 {
            return Err(EngineError::InvalidArgument("d must be at least 1".into()));
        }
        if branches.is_empty() {
            return Err(EngineError::InvalidArgument("no counterfunctions".into()));
        }
        for (_, t) in &branches {
            if !(0.0..=1.0).contains(t) {
                return Err(EngineError::OutOfRange { what: "t", value: *t });
            }
        }
        v0.check_dim(witness.dim())?;
        let wres = t_op.apply(witness)?.dist(witness);
        if wres > FIXED_POINT_TOL {
            return Err(HilbertError::WitnessNotFixed { residual: wres }.into());
        }
        let df = d as f64;
        let n_real = (df * df / eps).ceil();
        if !(n_real.is_finite() && n_real < u64::MAX as f64) {
            return Err(EngineError::OutOfRange { what: "d^2/eps", value: n_real });
        }
        let n = n_real as u64;
        let mut weights: Vec<f64> = Vec::new();
        for (_, t) in &branches {
            if !weights.contains(t) {
                weights.push(*t);
            }
        }
        let sixteen_d = 16.0 * df;
        let ctx = Rc::new(ProjCtx {
            engine: self.clone(),
            level,
            v0: v0.clone(),
            t_op: t_op.clone(),
            branches: branches.into_iter().map(|(cf, t)| Branch { cf, t }).collect(),
            weights,
            sixteen_d,
            upper: upper_bounds(sixteen_d),
            memo: RefCell::new(HashMap::new()),
        });

        let mut u = witness.clone();
        for i in 0..n {
            let phi = ctx.make_phi(u.clone(), n - i);
            let delta = ctx.delta(&u, &phi)?;
            let r = ctx.residual(&u);
            if !admits(delta, r) {
                return Err(EngineError::PreconditionViolated {
                    index: i + 1,
                    reason: format!("residual {r:e} not below delta {delta:e}"),
                });
            }
            let sel = ctx.select(&u, &phi)?;
            let lhs = v0.dist_sq(&u);
            if !sel.premise || lhs <= sel.dist * sel.dist + eps {
                self.record(level, "accept", &u, || format!("index={}", i + 1));
                return Ok(EpsProjectionResult {
                    u,
                    phi,
                    index_used: i + 1,
                    n_eps: n,
                    transcript: self.transcript(),
                });
            }
            u = u.lerp(&sel.w, sel.t);
        }
        Err(EngineError::Exhausted { n })
    }
}

/// Free-standing form with a fresh default engine.
#[allow(clippy::too_many_arguments)]
pub fn eps_projection(
    v0: &Point,
    t_op: &OperatorSpec,
    t: f64,
    eps: f64,
    cf: &Counterfunctions,
    witness: &Point,
    d: u64,
) -> Result<EpsProjectionResult, EngineError> {
    Engine::default().eps_projection(v0, t_op, t, eps, cf, witness, d)
}

/// Re-evaluates both conjuncts of the ε-projection claim for `(u, φ)`.
pub fn check_projection_claim(
    res: &EpsProjectionResult,
    v0: &Point,
    t_op: &OperatorSpec,
    t: f64,
    eps: f64,
    cf: &Counterfunctions,
) -> Result<(bool, bool), EngineError> {
    let u = &res.u;
    let delta = (cf.delta)(u, &res.phi)?;
    let c1 = admits(delta, t_op.eval(u).dist(u));
    let w = (cf.v)(u, &res.phi)?;
    let premise = admits(res.phi.eval(&w)?, t_op.eval(&w).dist(&w));
    let c2 = !premise || v0.dist_sq(u) <= v0.dist_sq(&u.lerp(&w, t)) + eps + AUDIT_SLACK;
    Ok((c1, c2))
}
