use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::instances::{attractor, halfspace, line, pt};
use super::{CheckReport, VerifyError, CHECK_SLACK};
use crate::engine::sample_ball;
use crate::hilbert::{
    projection_sqne_modulus, sqne_chain_modulus, ConditionModulus, OperatorKind, OperatorSpec, Point,
};
use crate::iterates::resolvent_point;
use crate::schedules::Schedule;

const RESOLVENT_TOL: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CaseOutcome {
    PremiseFalse,
    Inconclusive,
    Holds(f64),
    Violated(f64),
}

/// Premise and conclusion of one instantiated lemma.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaEval {
    /// Side conditions hold.
    pub side: bool,
    pub premise: bool,
    pub conclusion: bool,
    /// Slack of the conclusion; negative when it fails.
    pub margin: f64,
}

impl LemmaEval {
    fn new(side: bool, premise: bool, margin: f64) -> Self {
        LemmaEval { side, premise, conclusion: margin >= -CHECK_SLACK, margin }
    }

    pub fn outcome(&self) -> CaseOutcome {
        if !self.side {
            CaseOutcome::Inconclusive
        } else if !self.premise {
            CaseOutcome::PremiseFalse
        } else if self.conclusion {
            CaseOutcome::Holds(self.margin)
        } else {
            CaseOutcome::Violated(self.margin)
        }
    }

    /// Side conditions hold, the premise fails, and so does the conclusion.
    pub fn is_counterexample(&self) -> bool {
        self.side && !self.premise && !self.conclusion
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaKind {
    Switch,
    VipModulus,
    CoreSingle,
    CoreSingleDiag,
    Perm,
    FactSum,
    Subseq,
}

impl LemmaKind {
    pub const ALL: [LemmaKind; 7] = [
        LemmaKind::Switch,
        LemmaKind::VipModulus,
        LemmaKind::CoreSingle,
        LemmaKind::CoreSingleDiag,
        LemmaKind::Perm,
        LemmaKind::FactSum,
        LemmaKind::Subseq,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            LemmaKind::Switch => "switch",
            LemmaKind::VipModulus => "vip_modulus",
            LemmaKind::CoreSingle => "core_single",
            LemmaKind::CoreSingleDiag => "core_single_diag",
            LemmaKind::Perm => "perm",
            LemmaKind::FactSum => "fact_sum",
            LemmaKind::Subseq => "subseq",
        }
    }
}

impl fmt::Display for LemmaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LemmaKind {
    type Err = VerifyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        LemmaKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| VerifyError::InvalidQuery(format!("unknown lemma '{s}'")))
    }
}

fn check_eps(eps: f64, upper: Option<f64>) -> Result<(), VerifyError> {
    let ok = eps.is_finite() && eps > 0.0 && upper.map_or(true, |u| eps <= u);
    if ok {
        Ok(())
    } else {
        Err(VerifyError::InvalidQuery(format!("epsilon = {eps} out of range")))
    }
}

fn check_d(d: u64) -> Result<f64, VerifyError> {
    if d == 0 {
        return Err(VerifyError::InvalidQuery("d must be at least 1".into()));
    }
    Ok(d as f64)
}

/// `‖u*−u‖² ≤ ε²/2d² + ‖u − w_t‖²` with `w_t = (1−t)u* + tv`, `t = ε/3d²`,
/// implies `⟨u−u*, v−u*⟩ < ε`; side condition `‖u*−v‖ ≤ d`.
pub fn switch_case(u_star: &Point, u: &Point, v: &Point, eps: f64, d: u64) -> Result<LemmaEval, VerifyError> {
    check_eps(eps, Some(1.0))?;
    let df = check_d(d)?;
    let side = u_star.dist(v) <= df + CHECK_SLACK;
    let t = eps / (3.0 * df * df);
    let w = u_star.lerp(v, t);
    let premise = u_star.dist_sq(u) <= eps * eps / (2.0 * df * df) + u.dist_sq(&w);
    let val = u.sub(u_star).dot(&v.sub(u_star));
    Ok(LemmaEval::new(side, premise, eps - val))
}

/// `‖u−v‖ ≤ ε/(2d(2+τ))` and `⟨Gu−u, w−u⟩ ≤ ε/2` imply `⟨Gv−v, w−v⟩ ≤ ε`;
/// side conditions `‖w−u‖ ≤ d`, `‖Gv−v‖ ≤ d`.
pub fn vip_modulus_case(
    g: &OperatorSpec,
    u: &Point,
    v: &Point,
    w: &Point,
    eps: f64,
    d: u64,
) -> Result<LemmaEval, VerifyError> {
    check_eps(eps, None)?;
    let df = check_d(d)?;
    let tau = g.tau().ok_or_else(|| VerifyError::InvalidQuery("G must claim a contraction factor".into()))?;
    let gu = g.apply(u)?;
    let gv = g.apply(v)?;
    let side = w.dist(u) <= df + CHECK_SLACK && gv.dist(v) <= df + CHECK_SLACK;
    let premise =
        u.dist(v) <= eps / (2.0 * df * (2.0 + tau)) && gu.sub(u).dot(&w.sub(u)) <= eps / 2.0;
    let val = gv.sub(v).dot(&w.sub(v));
    Ok(LemmaEval::new(side, premise, eps - val))
}

/// Which premise set of the resolvent lemma to instantiate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorePremises {
    /// (i) `‖Tu*−u*‖ ≤ ε²(1−τ)/9dh(n)`, (ii) `⟨Gu*−u*, v_n−v⟩ ≤ ε²(1−τ)/3`,
    /// (iii) `⟨Gu*−u*, v−u*⟩ ≤ ε²(1−τ)/3`.
    Lemma,
    /// `v = v_n`: `‖Tu*−u*‖ ≤ ε²(1−τ)/6dh(n)` and `⟨Gu*−u*, v_n−u*⟩ ≤ ε²(1−τ)/2`.
    Diagonal,
}

/// Premises about `u*` imply `‖v_n − u*‖ ≤ ε`; side conditions
/// `λ_n ≥ 1/h(n)` and `‖v_n − u*‖ ≤ d`. `v` is ignored for the diagonal form.
#[allow(clippy::too_many_arguments)]
pub fn core_case(
    t: &OperatorSpec,
    g: &OperatorSpec,
    schedule: &Schedule,
    n: u64,
    u_star: &Point,
    v: &Point,
    eps: f64,
    d: u64,
    premises: CorePremises,
) -> Result<LemmaEval, VerifyError> {
    check_eps(eps, None)?;
    let df = check_d(d)?;
    let tau = g.tau().ok_or_else(|| VerifyError::InvalidQuery("G must claim a contraction factor".into()))?;
    let lam = schedule.lambda(n);
    let h = schedule.h(n).map_err(|e| VerifyError::InvalidQuery(e.to_string()))? as f64;
    let vn = resolvent_point(t, g, lam, RESOLVENT_TOL, None)?.point;
    let dist = vn.dist(u_star);
    let side = lam >= 1.0 / h && dist <= df + CHECK_SLACK;
    let r = g.apply(u_star)?.sub(u_star);
    let tres = t.apply(u_star)?.dist(u_star);
    let e2 = eps * eps * (1.0 - tau);
    let premise = match premises {
        CorePremises::Lemma => {
            tres <= e2 / (9.0 * df * h)
                && r.dot(&vn.sub(v)) <= e2 / 3.0
                && r.dot(&v.sub(u_star)) <= e2 / 3.0
        }
        CorePremises::Diagonal => tres <= e2 / (6.0 * df * h) && r.dot(&vn.sub(u_star)) <= e2 / 2.0,
    };
    Ok(LemmaEval::new(side, premise, eps - dist))
}

/// `T_{N−k}⋯T_1 T_N⋯T_{N−k+1} x`: indices `N−k+1, …, N` first, then `1, …, N−k`.
pub fn rotated_composite(ops: &[OperatorSpec], k: usize, x: &Point) -> Point {
    let n = ops.len();
    (n - k..n).chain(0..n - k).fold(x.clone(), |acc, i| ops[i].eval(&acc))
}

/// A family with a modulus `ρ̂` for its composition condition.
#[derive(Clone, Debug)]
pub struct PermInstance {
    pub label: String,
    pub ops: Vec<OperatorSpec>,
    pub p: Point,
    pub d: u64,
    pub rho_hat: ConditionModulus,
}

/// `‖T_{N−k}⋯T_{N−k+1}x − x‖ < relax·ρ̂(d, ε/(2N+1))` implies `‖T_i x − x‖ < ε`
/// for every `i`; side conditions `‖x − p‖ ≤ d`, `1 ≤ k < N`.
pub fn perm_case(inst: &PermInstance, x: &Point, k: usize, eps: f64, relax: f64) -> Result<LemmaEval, VerifyError> {
    check_eps(eps, None)?;
    let df = check_d(inst.d)?;
    let n = inst.ops.len();
    if n < 2 || k == 0 || k >= n {
        return Err(VerifyError::InvalidQuery(format!("k = {k} outside 1..{n}")));
    }
    let side = x.dist(&inst.p) <= df + CHECK_SLACK;
    let thr = relax * inst.rho_hat.eval(inst.d, eps / (2 * n + 1) as f64)?;
    let premise = rotated_composite(&inst.ops, k, x).dist(x) < thr;
    let worst = inst.ops.iter().map(|t| t.eval(x).dist(x)).fold(0.0, f64::max);
    Ok(LemmaEval::new(side, premise, eps - worst))
}

fn family_ratio(ops: &[OperatorSpec], k: Option<usize>, x: &Point) -> f64 {
    let c = match k {
        Some(k) => rotated_composite(ops, k, x),
        None => ops.iter().fold(x.clone(), |acc, t| t.eval(&acc)),
    };
    let s = ops.iter().map(|t| t.eval(x).dist(x)).fold(0.0, f64::max);
    c.dist(x) / s
}

/// Direction in the plane minimizing `‖Cx − x‖ / max_i ‖T_i x − x‖`, where `C`
/// is `T_N⋯T_1` (`k = None`) or the rotated composite; returns `(ratio, x)`.
fn min_ratio_direction(ops: &[OperatorSpec], k: Option<usize>) -> (f64, Point) {
    let at = |phi: f64| pt(&[phi.cos(), phi.sin()]);
    let f = |phi: f64| family_ratio(ops, k, &at(phi));
    let steps = 20_000;
    let (mut best, mut arg) = (f64::INFINITY, 0.0);
    for i in 0..steps {
        let phi = PI * i as f64 / steps as f64;
        let r = f(phi);
        if r < best {
            best = r;
            arg = phi;
        }
    }
    let (mut lo, mut hi) = (arg - PI / steps as f64, arg + PI / steps as f64);
    let gr = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let a = hi - gr * (hi - lo);
        let b = lo + gr * (hi - lo);
        if f(a) < f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let phi = (lo + hi) / 2.0;
    (f(phi).min(best), at(phi))
}

/// The sharp modulus `ρ̂(d, ε) = κ(1 − 10⁻⁹)ε` of two lines through the origin at
/// angle `θ`, with `κ = inf ‖T_2T_1x − x‖ / max_i ‖T_i x − x‖` found numerically.
pub fn sharp_line_modulus(theta: f64) -> Result<(PermInstance, f64), VerifyError> {
    let ops = vec![
        OperatorSpec::nonexpansive(line(&[1.0, 0.0]))?,
        OperatorSpec::nonexpansive(line(&[theta.cos(), theta.sin()]))?,
    ];
    let (kappa, _) = min_ratio_direction(&ops, None);
    let k = kappa * (1.0 - 1e-9);
    let rho = ConditionModulus::new(format!("sharp_lines(theta = {theta})"), 2, Arc::new(move |_, e| k * e))?;
    let inst = PermInstance { label: format!("lines(theta = {theta})"), ops, p: Point::zeros(2), d: 4, rho_hat: rho };
    Ok((inst, kappa))
}

fn chain_instance(label: &str, kinds: Vec<OperatorKind>, dim: usize) -> Result<PermInstance, VerifyError> {
    let n = kinds.len();
    let ops = kinds.into_iter().map(OperatorSpec::nonexpansive).collect::<Result<Vec<_>, _>>()?;
    let rho = sqne_chain_modulus(vec![projection_sqne_modulus(); n], Arc::new(|e| e), n)?;
    Ok(PermInstance { label: label.into(), ops, p: Point::zeros(dim), d: 1, rho_hat: rho })
}

/// Halfspace families with the SQNE chain modulus, plus the sharp two-line family.
pub fn perm_instances() -> Result<Vec<PermInstance>, VerifyError> {
    let s3 = 3f64.sqrt() / 2.0;
    Ok(vec![
        chain_instance("orthogonal halfspaces", vec![halfspace(&[1.0, 0.0], 0.0), halfspace(&[0.0, 1.0], 0.0)], 2)?,
        chain_instance("halfspaces at 60 degrees", vec![halfspace(&[1.0, 0.0], 0.0), halfspace(&[0.5, s3], 0.0)], 2)?,
        chain_instance(
            "three halfspaces",
            vec![halfspace(&[1.0, 0.0, 0.0], 0.0), halfspace(&[0.0, 1.0, 0.0], 0.0), halfspace(&[0.0, 0.0, 1.0], 0.0)],
            3,
        )?,
        sharp_line_modulus(0.3)?.0,
    ])
}

/// Two lines at `θ = 0.3`, `ε = 0.2`: a point whose rotated composite passes
/// the premise relaxed by `10×` while `max_i ‖T_i x − x‖ = 1.2ε`.
pub fn perm_negative() -> Result<(PermInstance, Point, f64), VerifyError> {
    let (inst, _) = sharp_line_modulus(0.3)?;
    let eps = 0.2;
    let (_, dir) = min_ratio_direction(&inst.ops, Some(1));
    let s = inst.ops.iter().map(|t| t.eval(&dir).dist(&dir)).fold(0.0, f64::max);
    let x = dir.scale(1.2 * eps / s);
    Ok((inst, x, eps))
}

/// `Σ_{i=m}^{n} λ_i Π_{j=i+1}^{n} (1−λ_j) ≤ 1` for `λ ⊂ [0, 1]`.
pub fn fact_sum_case(lambdas: &[f64], m: usize, n: usize) -> LemmaEval {
    let side = m <= n && n < lambdas.len();
    if !side {
        return LemmaEval::new(false, false, 0.0);
    }
    let window = &lambdas[m..=n];
    let premise = window.iter().all(|l| (0.0..=1.0).contains(l));
    let mut prod = 1.0;
    let mut sum = 0.0;
    for &l in window.iter().rev() {
        sum += l * prod;
        prod *= 1.0 - l;
    }
    LemmaEval::new(true, premise, 1.0 - sum)
}

/// With `g_{u,ε}(m) = g(m)` if `‖v_{g(m)} − u‖ > ε/2` and `m` otherwise,
/// `‖v_{g_{u,ε}(m)} − u‖ ≤ ε/2` implies `‖v_{g(m)} − v_m‖ ≤ ε`.
pub fn subseq_case(v: &[Point], g: &dyn Fn(u64) -> u64, u: &Point, eps: f64, m: u64) -> Result<LemmaEval, VerifyError> {
    check_eps(eps, None)?;
    let gm = g(m);
    let (Ok(mi), Ok(gi)) = (usize::try_from(m), usize::try_from(gm)) else {
        return Ok(LemmaEval::new(false, false, 0.0));
    };
    if mi >= v.len() || gi >= v.len() {
        return Ok(LemmaEval::new(false, false, 0.0));
    }
    let sel = if v[gi].dist(u) > eps / 2.0 { gi } else { mi };
    let premise = v[sel].dist(u) <= eps / 2.0;
    Ok(LemmaEval::new(true, premise, eps - v[gi].dist(&v[mi])))
}

fn unit<R: Rng>(rng: &mut R, dim: usize) -> Point {
    loop {
        let z = sample_ball(rng, &Point::zeros(dim), 1.0);
        let n = z.norm();
        if n > 1e-3 {
            return z.scale(1.0 / n);
        }
    }
}

fn fuzz_switch(rep: &mut CheckReport, rng: &mut ChaCha8Rng, cases: usize) -> Result<(), VerifyError> {
    for _ in 0..cases {
        let dim = rng.gen_range(1..=3);
        let d = rng.gen_range(1..=3u64);
        let df = d as f64;
        let eps = rng.gen_range(0.01..=1.0);
        let u_star = sample_ball(rng, &Point::zeros(dim), 2.0);
        let l = rng.gen_range(0.0..=df);
        let e = unit(rng, dim);
        let v = u_star.axpy(l, &e);
        let u = if rng.gen_bool(0.2) || l == 0.0 {
            sample_ball(rng, &u_star, 2.0 * df)
        } else {
            let t = eps / (3.0 * df * df);
            let a_max = (eps * eps / (2.0 * df * df) + t * t * l * l) / (2.0 * t * l);
            let a = rng.gen_range(0.0..=1.2 * a_max);
            let o = unit(rng, dim);
            let o = o.axpy(-o.dot(&e), &e);
            u_star.axpy(a, &e).axpy(rng.gen_range(0.0..=df), &o)
        };
        rep.record(switch_case(&u_star, &u, &v, eps, d)?.outcome());
    }
    let neg = switch_case(&pt(&[0.0, 0.0]), &pt(&[1.0, 0.0]), &pt(&[1.0, 0.0]), 0.5, 1)?;
    rep.negative_case = Some(neg.is_counterexample());
    Ok(())
}

fn fuzz_vip_modulus(rep: &mut CheckReport, rng: &mut ChaCha8Rng, cases: usize) -> Result<(), VerifyError> {
    let centre = Point::zeros(2);
    let taus = [0.0, 0.25, 0.5, 0.75];
    let mut maps = Vec::new();
    for _ in 0..8 {
        let a = sample_ball(rng, &centre, 0.5);
        let tau = taus[rng.gen_range(0..taus.len())];
        maps.push(attractor(&a, tau)?);
    }
    for i in 0..cases {
        let g = &maps[i % maps.len()];
        let tau = g.tau().unwrap_or(0.0);
        let eps = rng.gen_range(0.01..=1.0);
        let u = sample_ball(rng, &centre, 0.5);
        let r = rng.gen_range(0.0..=1.2 * eps / (2.0 * (2.0 + tau)));
        let v = sample_ball(rng, &u, r);
        let v = if v.norm() > 0.5 { v.scale(0.5 / v.norm()) } else { v };
        let w = sample_ball(rng, &centre, 0.5);
        rep.record(vip_modulus_case(g, &u, &v, &w, eps, 1)?.outcome());
    }
    let g0 = attractor(&Point::zeros(2), 0.0)?;
    let neg = vip_modulus_case(&g0, &pt(&[0.0, 0.0]), &pt(&[-0.5, 0.0]), &pt(&[0.5, 0.0]), 0.4, 1)?;
    rep.negative_case = Some(neg.is_counterexample());
    Ok(())
}

fn fuzz_core(rep: &mut CheckReport, rng: &mut ChaCha8Rng, cases: usize, premises: CorePremises) -> Result<(), VerifyError> {
    let centre = Point::zeros(2);
    let t = OperatorSpec::nonexpansive(OperatorKind::ProjectBall { center: centre.clone(), radius: 0.5 })?;
    let s = Schedule::power(0.5).expect("valid schedule");
    let taus = [0.0, 0.25, 0.5, 0.75];
    for _ in 0..cases {
        let a = sample_ball(rng, &centre, 1.2);
        let tau = taus[rng.gen_range(0..taus.len())];
        let g = attractor(&a, tau)?;
        let n = rng.gen_range(1..=2000u64);
        let eps = rng.gen_range(0.05..=1.0);
        let vn = resolvent_point(&t, &g, s.lambda(n), RESOLVENT_TOL, None)?.point;
        let h = s.h(n).map_err(|e| VerifyError::InvalidQuery(e.to_string()))? as f64;
        let base = t.eval(&vn.axpy(rng.gen_range(0.0..=1.5 * eps), &unit(rng, 2)));
        let push = rng.gen_range(0.0..=1.5 * eps * eps * (1.0 - tau) / (6.0 * h));
        let u_star = if base.norm() > 0.5 - 1e-12 && rng.gen_bool(0.5) {
            base.scale((0.5 + push) / base.norm())
        } else {
            base
        };
        let r = g.eval(&u_star).sub(&u_star).norm();
        let q = rng.gen_range(0.0..=1.5 * eps * eps * (1.0 - tau) / (3.0 * r + 1e-12));
        let v = vn.axpy(q.min(1.0), &unit(rng, 2));
        rep.record(core_case(&t, &g, &s, n, &u_star, &v, eps, 1, premises)?.outcome());
    }
    let a = pt(&[0.2, 0.1]);
    let g = attractor(&a, 0.0)?;
    let far = a.scale(-0.5 / a.norm());
    let neg = core_case(&t, &g, &s, 10, &far, &far, 0.3, 1, premises)?;
    rep.negative_case = Some(neg.is_counterexample());
    Ok(())
}

fn fuzz_perm(rep: &mut CheckReport, rng: &mut ChaCha8Rng, cases: usize) -> Result<(), VerifyError> {
    let insts = perm_instances()?;
    let mut held = Vec::new();
    for inst in &insts {
        let n = inst.ops.len();
        let dim = inst.p.dim();
        let before = rep.premise_held;
        for _ in 0..cases {
            let eps = rng.gen_range(0.05..=1.0);
            let k = rng.gen_range(1..n);
            let rho = inst.rho_hat.eval(inst.d, eps / (2 * n + 1) as f64)?;
            // Near the common fixed set, at scales spanning the premise threshold.
            let q = inst.ops.iter().fold(sample_ball(rng, &inst.p, inst.d as f64 * 0.8), |acc, t| t.eval(&acc));
            let (lo, hi) = ((rho * 1e-3).ln(), (2.0 * eps).ln());
            let scale = rng.gen_range(lo..=hi).exp();
            let x = q.axpy(scale, &unit(rng, dim));
            rep.record(perm_case(inst, &x, k, eps, 1.0)?.outcome());
        }
        held.push(format!("{}: {}", inst.label, rep.premise_held - before));
    }
    let (inst, x, eps) = perm_negative()?;
    let neg = perm_case(&inst, &x, 1, eps, 10.0)?;
    rep.negative_case = Some(neg.side && neg.premise && !neg.conclusion);
    rep.detail = format!("premise held per instance [{}]", held.join(", "));
    Ok(())
}

fn fuzz_fact_sum(rep: &mut CheckReport, rng: &mut ChaCha8Rng, cases: usize) {
    for _ in 0..cases {
        let len = rng.gen_range(1..=200);
        let mode = rng.gen_range(0..3);
        let lambdas: Vec<f64> = (0..len)
            .map(|_| match mode {
                0 => rng.gen::<f64>(),
                1 => rng.gen::<f64>().powi(6),
                _ => {
                    if rng.gen_bool(0.2) {
                        1.0
                    } else {
                        rng.gen::<f64>() * 0.1
                    }
                }
            })
            .collect();
        let n = rng.gen_range(0..len);
        let m = rng.gen_range(0..=n);
        rep.record(fact_sum_case(&lambdas, m, n).outcome());
    }
    rep.negative_case = Some(fact_sum_case(&[1.5], 0, 0).is_counterexample());
}

fn fuzz_subseq(rep: &mut CheckReport, rng: &mut ChaCha8Rng, cases: usize) -> Result<(), VerifyError> {
    for _ in 0..cases {
        let dim = rng.gen_range(1..=3);
        let len = rng.gen_range(2..=60);
        let spread = rng.gen_range(0.01..=1.0);
        let centres: Vec<Point> = (0..3).map(|_| sample_ball(rng, &Point::zeros(dim), 1.0)).collect();
        let v: Vec<Point> = (0..len)
            .map(|_| {
                let c = &centres[rng.gen_range(0..centres.len())];
                sample_ball(rng, c, spread)
            })
            .collect();
        let eps = rng.gen_range(0.01..=2.0);
        let anchor = rng.gen_range(0..len);
        let u = sample_ball(rng, &v[anchor], eps);
        let offsets: Vec<u64> = (0..len).map(|_| rng.gen_range(0..len as u64)).collect();
        let lenu = len as u64;
        let g = move |m: u64| (m + offsets[m as usize % offsets.len()]) % lenu;
        let m = rng.gen_range(0..lenu);
        rep.record(subseq_case(&v, &g, &u, eps, m)?.outcome());
    }
    let e = 0.3;
    let v = vec![pt(&[0.0]), pt(&[3.0 * e])];
    let neg = subseq_case(&v, &|_| 1, &pt(&[0.0]), e, 0)?;
    rep.negative_case = Some(neg.is_counterexample());
    Ok(())
}

/// Runs `cases` randomized instances of `kind` plus its engineered negative case.
pub fn check_lemma(kind: LemmaKind, cases: usize, seed: u64) -> Result<CheckReport, VerifyError> {
    let mut rep = CheckReport::new(kind.name(), seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (kind as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    match kind {
        LemmaKind::Switch => fuzz_switch(&mut rep, &mut rng, cases)?,
        LemmaKind::VipModulus => fuzz_vip_modulus(&mut rep, &mut rng, cases)?,
        LemmaKind::CoreSingle => fuzz_core(&mut rep, &mut rng, cases, CorePremises::Lemma)?,
        LemmaKind::CoreSingleDiag => fuzz_core(&mut rep, &mut rng, cases, CorePremises::Diagonal)?,
        LemmaKind::Perm => fuzz_perm(&mut rep, &mut rng, cases)?,
        LemmaKind::FactSum => fuzz_fact_sum(&mut rep, &mut rng, cases),
        LemmaKind::Subseq => fuzz_subseq(&mut rep, &mut rng, cases)?,
    }
    Ok(rep)
}
