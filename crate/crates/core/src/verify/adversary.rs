use std::fmt;
use std::rc::Rc;
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::instances::SingleInstance;
use super::{CaseOutcome, CheckReport, VerifyError, CHECK_SLACK};
use crate::engine::{
    anticipating_with_probe, audit, branch_adversary, constant_adversary, random_adversary, sample_ball,
    AnticipatingParams, AnticipatingProbe, AuditReport, Counterfunctions, Engine, EngineError, TowerResult,
};
use crate::gfun::GFunction;
use crate::hilbert::Point;
use crate::iterates::ResolventPath;

const PATH_TOL: f64 = 1e-12;
/// Search cap for `J` in the anticipating strategy.
pub const ANTICIPATING_CAP: u64 = 2_000;
/// Top-level weight `t` of audit runs.
const AUDIT_T: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Anticipating,
    Branch,
    Random,
    Constant,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Anticipating, Strategy::Branch, Strategy::Random, Strategy::Constant];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Anticipating => "anticipating",
            Strategy::Branch => "branch",
            Strategy::Random => "random",
            Strategy::Constant => "constant",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = VerifyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_lowercase();
        Strategy::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| VerifyError::InvalidQuery(format!("unknown strategy '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Passed,
    Violated,
    /// The evaluation budget ran out; not a failure.
    BudgetExceeded,
    /// The re-measurement had nothing to check.
    Inconclusive,
}

fn anticipating(inst: &SingleInstance, eps: f64, g: &GFunction) -> Result<(Counterfunctions, AnticipatingProbe), VerifyError> {
    let path = Rc::new(ResolventPath::new(inst.t.clone(), inst.g.clone(), inst.schedule, PATH_TOL)?);
    let s = inst.schedule;
    let params = AnticipatingParams {
        eps,
        d: inst.d,
        tau: inst.tau,
        g: g.as_gfn(),
        h: Arc::new(move |n| s.h(n)),
        cap: ANTICIPATING_CAP,
    };
    Ok(anticipating_with_probe(path, params))
}

/// A fixed point of `T` drawn from the ball of radius `d/2` around the witness.
fn fixed_point_sample(inst: &SingleInstance, seed: u64) -> Result<Point, VerifyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = sample_ball(&mut rng, &inst.witness, inst.d as f64 / 2.0);
    Ok(inst.t.nearest_fixed_point(&y)?)
}

/// Branch weight `t = (ε/2)²/(2d²)`.
fn branch_weight(eps: f64, d: u64) -> f64 {
    (eps / 2.0).powi(2) / (2.0 * (d * d) as f64)
}

/// Counterfunctions implementing `strategy` on `inst`.
///
/// The branch strategy wraps the random one and challenges with a fixed point
/// of `T` drawn from `seed`.
pub fn adversary_suite(
    inst: &SingleInstance,
    strategy: Strategy,
    eps: f64,
    g: &GFunction,
    seed: u64,
) -> Result<Counterfunctions, VerifyError> {
    Ok(match strategy {
        Strategy::Constant => constant_adversary(inst.witness.clone(), 1.0),
        Strategy::Random => random_adversary(inst.t.clone(), inst.witness.clone(), inst.d as f64 / 2.0, seed),
        Strategy::Anticipating => anticipating(inst, eps, g)?.0,
        Strategy::Branch => {
            let inner = random_adversary(inst.t.clone(), inst.witness.clone(), inst.d as f64 / 2.0, seed);
            let x = fixed_point_sample(inst, seed)?;
            branch_adversary(inner, inst.g.clone(), branch_weight(eps, inst.d), x)
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRun {
    pub instance: String,
    pub strategy: Strategy,
    pub tau: f64,
    pub eps: f64,
    pub seed: u64,
    pub status: RunStatus,
    pub evaluations: u64,
    pub budget: u64,
    pub residual: Option<f64>,
    pub delta: Option<f64>,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub note: Option<String>,
}

fn tower(
    inst: &SingleInstance,
    engine: &Engine,
    eps: f64,
    t: f64,
    cf: &Counterfunctions,
) -> Result<Option<TowerResult>, VerifyError> {
    match engine.picard_tower(&inst.start, &inst.t, &inst.g, eps, t, cf, inst.d, &inst.witness) {
        Ok(r) => Ok(Some(r)),
        Err(f) if matches!(f.error, EngineError::BudgetExceeded { .. }) => Ok(None),
        Err(f) => Err(f.error.into()),
    }
}

fn audit_status(rep: &AuditReport) -> RunStatus {
    if rep.passed() {
        RunStatus::Passed
    } else {
        RunStatus::Violated
    }
}

/// Runs the tower against `strategy` and re-audits both conjuncts of its claim.
pub fn run_audit(
    inst: &SingleInstance,
    strategy: Strategy,
    eps: f64,
    seed: u64,
    budget: u64,
) -> Result<AuditRun, VerifyError> {
    let g: GFunction = "n+1".parse().expect("valid expression");
    let cf = adversary_suite(inst, strategy, eps, &g, seed)?;
    let engine = Engine::new(budget);
    let mut run = AuditRun {
        instance: inst.label.clone(),
        strategy,
        tau: inst.tau,
        eps,
        seed,
        status: RunStatus::BudgetExceeded,
        evaluations: 0,
        budget,
        residual: None,
        delta: None,
        lhs: None,
        rhs: None,
        note: None,
    };
    let res = tower(inst, &engine, eps, AUDIT_T, &cf);
    run.evaluations = engine.budget().used();
    let Some(res) = res? else {
        run.note = Some(format!("budget of {budget} evaluations exhausted"));
        return Ok(run);
    };
    let rep = audit(&res, &inst.t, &inst.g, &cf, AUDIT_T, eps)?;
    run.status = audit_status(&rep);
    run.residual = Some(rep.residual);
    run.delta = Some(rep.delta);
    run.lhs = Some(rep.lhs);
    run.rhs = Some(rep.rhs);
    Ok(run)
}

/// `runs` audits cycling through instances, accuracies and the constant,
/// random and anticipating strategies; run `i` uses seed `seed + i`.
pub fn run_audit_suite(
    insts: &[SingleInstance],
    epsilons: &[f64],
    runs: usize,
    seed: u64,
    budget: u64,
) -> Result<(CheckReport, Vec<AuditRun>), VerifyError> {
    let strategies = [Strategy::Constant, Strategy::Random, Strategy::Anticipating];
    let mut combos = Vec::new();
    for inst in insts {
        for &e in epsilons {
            for s in strategies {
                combos.push((inst, e, s));
            }
        }
    }
    if combos.is_empty() {
        return Err(VerifyError::InvalidQuery("no audit combinations".into()));
    }
    let mut rep = CheckReport::new("tower_audit", seed);
    let mut out = Vec::with_capacity(runs);
    for i in 0..runs {
        let (inst, eps, s) = combos[i % combos.len()];
        let run = run_audit(inst, s, eps, seed.wrapping_add(i as u64), budget)?;
        rep.record(match run.status {
            RunStatus::Passed => CaseOutcome::Holds(run.rhs.zip(run.lhs).map_or(0.0, |(r, l)| r - l)),
            RunStatus::Violated => CaseOutcome::Violated(run.rhs.zip(run.lhs).map_or(0.0, |(r, l)| r - l)),
            RunStatus::BudgetExceeded | RunStatus::Inconclusive => CaseOutcome::Inconclusive,
        });
        out.push(run);
    }
    let exhausted = out.iter().filter(|r| r.status == RunStatus::BudgetExceeded).count();
    rep.detail = format!("{runs} runs, {exhausted} stopped by the evaluation budget");
    Ok((rep, out))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchOutcome {
    pub eps: f64,
    pub seed: u64,
    pub status: RunStatus,
    /// `⟨Gu − u, x − u⟩`.
    pub value: Option<f64>,
    /// `(ε/2)²/2`.
    pub bound: f64,
    pub premise: Option<bool>,
    pub audit_passed: Option<bool>,
    pub evaluations: u64,
}

/// Tower at accuracy `(ε/2)⁴/4d²` and weight `(ε/2)²/2d²` against the branch
/// strategy; re-measures `⟨Gu − u, x − u⟩ < (ε/2)²/2` for the challenge `x`.
pub fn run_branch_end_to_end(inst: &SingleInstance, eps: f64, seed: u64, budget: u64) -> Result<BranchOutcome, VerifyError> {
    let d2 = (inst.d * inst.d) as f64;
    let acc = (eps / 2.0).powi(4) / (4.0 * d2);
    let t = branch_weight(eps, inst.d);
    let x = fixed_point_sample(inst, seed)?;
    let inner = random_adversary(inst.t.clone(), inst.witness.clone(), inst.d as f64 / 2.0, seed);
    let cf = branch_adversary(inner, inst.g.clone(), t, x.clone());
    let engine = Engine::new(budget);
    let bound = (eps / 2.0).powi(2) / 2.0;
    let mut out = BranchOutcome {
        eps,
        seed,
        status: RunStatus::BudgetExceeded,
        value: None,
        bound,
        premise: None,
        audit_passed: None,
        evaluations: 0,
    };
    let res = tower(inst, &engine, acc.min(1.0), t, &cf);
    out.evaluations = engine.budget().used();
    let Some(res) = res? else { return Ok(out) };
    let rep = audit(&res, &inst.t, &inst.g, &cf, t, acc)?;
    let u = &res.u_star;
    let value = inst.g.eval(u).sub(u).dot(&x.sub(u));
    out.value = Some(value);
    out.premise = Some(rep.premise);
    out.audit_passed = Some(rep.passed());
    out.status = if !rep.passed() {
        RunStatus::Violated
    } else if !rep.premise || x.dist(u) > inst.d as f64 {
        RunStatus::Inconclusive
    } else if value < bound + CHECK_SLACK {
        RunStatus::Passed
    } else {
        RunStatus::Violated
    };
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndToEnd {
    pub eps: f64,
    pub g: String,
    pub status: RunStatus,
    /// Tower accuracy `(ε/2)⁴/(8(1−τ)²d²)`, capped at 1.
    pub tower_eps: f64,
    /// Tower weight `(ε/2)²/(6(1−τ)²d²)`, capped at 1.
    pub tower_t: f64,
    pub j: Option<u64>,
    pub g_tilde_j: Option<u64>,
    /// `‖v_j − v_{g̃(j)}‖`.
    pub distance: Option<f64>,
    pub audit_passed: Option<bool>,
    pub evaluations: u64,
}

/// Re-enacts the single-operator metastability argument: the tower runs against
/// the anticipating strategy, and the accepted `j` is checked directly for
/// `‖v_j − v_{g̃(j)}‖ ≤ ε`.
pub fn run_anticipating_end_to_end(
    inst: &SingleInstance,
    eps: f64,
    g: &GFunction,
    budget: u64,
) -> Result<EndToEnd, VerifyError> {
    let q = (1.0 - inst.tau).powi(2) * (inst.d * inst.d) as f64;
    let tower_eps = ((eps / 2.0).powi(4) / (8.0 * q)).min(1.0);
    let tower_t = ((eps / 2.0).powi(2) / (6.0 * q)).min(1.0);
    let (cf, probe) = anticipating(inst, eps, g)?;
    let engine = Engine::new(budget);
    let mut out = EndToEnd {
        eps,
        g: g.label().to_string(),
        status: RunStatus::BudgetExceeded,
        tower_eps,
        tower_t,
        j: None,
        g_tilde_j: None,
        distance: None,
        audit_passed: None,
        evaluations: 0,
    };
    let res = tower(inst, &engine, tower_eps, tower_t, &cf);
    out.evaluations = engine.budget().used();
    let Some(res) = res? else { return Ok(out) };
    let rep = audit(&res, &inst.t, &inst.g, &cf, tower_t, tower_eps)?;
    out.audit_passed = Some(rep.passed());
    let Some(j) = probe.j(&res.u_star, &res.phi)? else {
        out.status = RunStatus::Inconclusive;
        return Ok(out);
    };
    let k = probe.g_tilde(j);
    let path = probe.path();
    let dist = path.get(j)?.dist(&path.get(k)?);
    out.j = Some(j);
    out.g_tilde_j = Some(k);
    out.distance = Some(dist);
    out.status = if rep.passed() && dist <= eps + CHECK_SLACK { RunStatus::Passed } else { RunStatus::Violated };
    Ok(out)
}
