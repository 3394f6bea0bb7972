//! The `hsdm` command line: `solve`, `certify` and `verify`.

use std::fmt;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::Serialize;
use thiserror::Error;

use crate::gfun::GFunction;
use crate::hilbert::{
    bauschke_modulus, projection_sqne_modulus, sqne_chain_modulus, ConditionModulus, OperatorKind, Point,
};
use crate::iterates::{cyclic_composite, iterate, resolvent_path, IterateError, Scheme, Trajectory};
use crate::rates::{
    asy_rate, xi_family, xi_full, xi_single, Certificate, FullMode, OmegaReading, RateError, RateValue,
};
use crate::spec::{Problem, SpecError};
use crate::verify::{
    check_confinement, check_lemma, empirical_metastability, run_anticipating_end_to_end, run_audit_suite,
    run_branch_end_to_end, AuditRun, BranchOutcome, CaseOutcome, CheckReport, ConfinementInput, ConfinementMode,
    ConfinementReport, EndToEnd, LemmaKind, MetaQuery, RunStatus, SuiteReport, VerifyError, asy_witness,
};

/// Longest trajectory built to measure an empirical witness.
const WITNESS_LEN_CAP: u64 = 200_000;
const RESOLVENT_LEN_CAP: u64 = 20_000;
const RESOLVENT_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("invalid arguments: {0}")]
    Usage(String),
    #[error("{0}")]
    Divergence(String),
    #[error("required modulus does not exist: {0}")]
    NoModulus(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("{0}")]
    Runtime(String),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Spec(_) | CliError::Usage(_) => 2,
            CliError::Divergence(_) => 3,
            CliError::NoModulus(_) => 4,
            CliError::CheckFailed(_) => 5,
            CliError::Runtime(_) | CliError::Io { .. } => 1,
        }
    }
}

impl From<RateError> for CliError {
    fn from(e: RateError) -> Self {
        match e {
            RateError::NoModulus { .. } => CliError::NoModulus(e.to_string()),
            RateError::InvalidArgument(s) => CliError::Usage(s),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<IterateError> for CliError {
    fn from(e: IterateError) -> Self {
        match e {
            IterateError::Divergence { .. } => CliError::Divergence(e.to_string()),
            IterateError::InvalidArgument(s) => CliError::Usage(s),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Iterate(IterateError::Divergence { .. }) => CliError::Divergence(e.to_string()),
            VerifyError::InvalidQuery(s) => CliError::Usage(s),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CertMode {
    /// Rate for the resolvent path.
    Single,
    /// Rate for the iterates.
    Full,
    /// Rate for the iterates together with the approximate VIP.
    Quant,
    /// Rate for a cyclic family.
    Family,
    /// Asymptotic regularity.
    Asy,
}

impl fmt::Display for CertMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CertMode::Single => "single",
            CertMode::Full => "full",
            CertMode::Quant => "quant",
            CertMode::Family => "family",
            CertMode::Asy => "asy",
        })
    }
}

impl FromStr for CertMode {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        <CertMode as ValueEnum>::from_str(s, true).map_err(|_| CliError::Usage(format!("unknown mode '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Lemmas,
    Adversary,
    Confinement,
    All,
}

impl Suite {
    fn expand(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![Suite::Lemmas, Suite::Adversary, Suite::Confinement],
            s => vec![s],
        }
    }

    fn name(self) -> &'static str {
        match self {
            Suite::Lemmas => "lemmas",
            Suite::Adversary => "adversary",
            Suite::Confinement => "confinement",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        <Suite as ValueEnum>::from_str(s, true).map_err(|_| CliError::Usage(format!("unknown suite '{s}'")))
    }
}

#[derive(Debug, Parser)]
#[command(name = "hsdm", version, about = "Hybrid steepest descent: solve, certify rates, verify")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an iteration and write the trajectory as CSV.
    Solve {
        #[arg(long)]
        spec: PathBuf,
        /// Defaults to hsdm-single, or hsdm-cyclic for a family.
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a rate bound and write a certificate.
    Certify {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value = "n+1")]
        g: String,
        #[arg(long, value_enum)]
        mode: CertMode,
        /// Replaces the evaluation budget of the problem file.
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run verification suites and write a report.
    Verify {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Randomized cases per lemma.
        #[arg(long, default_value_t = 1000)]
        cases: usize,
        /// Iterations for the confinement run.
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Solve { spec, scheme, steps, out } => cmd_solve(&spec, scheme.as_deref(), steps, out.as_deref()),
        Command::Certify { spec, epsilon, g, mode, budget, out } => {
            cmd_certify(&spec, epsilon, &g, mode, budget, out.as_deref())
        }
        Command::Verify { spec, suite, epsilon, budget, seed, cases, steps, out } => {
            let opts = VerifyOptions { epsilon, budget, seed, cases, steps };
            cmd_verify(&spec, suite, &opts, out.as_deref())
        }
    }
}

fn write_out(path: Option<&Path>, body: &[u8]) -> Result<()> {
    match path {
        Some(p) => File::create(p)
            .and_then(|mut f| f.write_all(body))
            .map_err(|source| CliError::Io { path: p.display().to_string(), source }),
        None => io::stdout()
            .write_all(body)
            .map_err(|source| CliError::Io { path: "stdout".into(), source }),
    }
}

fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s.into_bytes()
}

/// Summary printed after a solve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveSummary {
    pub scheme: String,
    pub steps: usize,
    pub final_point: Point,
    /// `‖T_i u_n − u_n‖` per operator.
    pub fixed_point_residuals: Vec<f64>,
    pub step_residual: f64,
    pub distance_to_solution: Option<f64>,
}

pub fn solve(problem: &Problem, scheme: Option<&str>, steps: usize) -> Result<(Trajectory, SolveSummary)> {
    let scheme = match scheme {
        Some(s) => Scheme::from_str(s).map_err(|e| CliError::Usage(e.to_string()))?,
        None => problem.default_scheme(),
    };
    let traj = iterate(scheme, &problem.ops, &problem.g, &problem.spec.schedule, &problem.spec.start, steps)?;
    let u = traj.last().clone();
    let summary = SolveSummary {
        scheme: scheme.to_string(),
        steps,
        fixed_point_residuals: problem.ops.iter().map(|t| t.eval(&u).dist(&u)).collect(),
        step_residual: *traj.residuals.last().unwrap_or(&0.0),
        distance_to_solution: problem.spec.solution.as_ref().map(|s| s.dist(&u)),
        final_point: u,
    };
    Ok((traj, summary))
}

pub fn cmd_solve(spec: &Path, scheme: Option<&str>, steps: usize, out: Option<&Path>) -> Result<()> {
    let problem = Problem::load(spec)?;
    let (traj, summary) = solve(&problem, scheme, steps)?;
    let mut buf = Vec::new();
    traj.write_csv(&mut buf).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_out(out, &buf)?;
    let line = String::from_utf8(to_json(&summary)).expect("utf-8");
    if out.is_some() {
        print!("{line}");
    } else {
        eprint!("{line}");
    }
    Ok(())
}

fn is_projection(k: &OperatorKind) -> bool {
    match k {
        OperatorKind::Identity
        | OperatorKind::ProjectBall { .. }
        | OperatorKind::ProjectBox { .. }
        | OperatorKind::ProjectHalfspace { .. }
        | OperatorKind::ProjectAffine { .. } => true,
        OperatorKind::Compose { ops } => ops.len() == 1 && is_projection(&ops[0]),
        _ => false,
    }
}

/// `ρ(d, ε) = ρ̂(d, ε/(2N+1))` with `ρ̂` the SQNE chain modulus of metric projections.
pub fn family_modulus(problem: &Problem) -> Result<ConditionModulus> {
    let n = problem.n_family();
    if let Some(i) = problem.ops.iter().position(|t| !is_projection(t.kind())) {
        return Err(CliError::NoModulus(format!(
            "operator {} is not a metric projection, so no SQNE modulus is available",
            i + 1
        )));
    }
    let rho_hat = sqne_chain_modulus(vec![projection_sqne_modulus(); n], Arc::new(|e| e), n)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    bauschke_modulus(&rho_hat, n).map_err(|e| CliError::Runtime(e.to_string()))
}

fn no_modulus_in(b: &RateValue) -> Result<()> {
    match b {
        RateValue::NoModulus { reason } => Err(CliError::NoModulus(reason.clone())),
        _ => Ok(()),
    }
}

fn bound_u64(b: &RateValue) -> Option<u64> {
    b.value().and_then(BigUint::to_u64)
}

/// Largest `c` with `c + g(c) + 1 ≤ limit`, for monotone `g`.
fn window_cap(g: &GFunction, limit: u64) -> Option<u64> {
    let fits = |c: u64| c.saturating_add(g.eval(c)).saturating_add(1) <= limit;
    if !fits(0) {
        return None;
    }
    let (mut lo, mut hi) = (0u64, limit);
    while lo < hi {
        let mid = lo + (hi - lo + 1) / 2;
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Some(lo)
}

fn witness_points(problem: &Problem, len: u64, resolvents: bool) -> Result<Vec<Point>> {
    Ok(if resolvents {
        let idx: Vec<u64> = (0..len).collect();
        resolvent_path(&problem.ops[0], &problem.g, &problem.spec.schedule, &idx, RESOLVENT_TOL)?
    } else {
        let scheme = problem.default_scheme();
        iterate(scheme, &problem.ops, &problem.g, &problem.spec.schedule, &problem.spec.start, len as usize)?.points
    })
}

/// Least metastable index of the resolvent path or the iterates, when the
/// needed prefix is small enough to build.
///
/// A search that finds nothing up to `bound` continues past it, so that a
/// violated bound shows up as a witness above it.
fn meta_witness(problem: &Problem, eps: f64, g: &GFunction, bound: u64, resolvents: bool) -> Result<Option<u64>> {
    let len = bound.saturating_add(g.eval(bound)).saturating_add(1);
    if len > WITNESS_LEN_CAP || !g.is_monotone() {
        return Ok(None);
    }
    let points = witness_points(problem, len, resolvents)?;
    let q = MetaQuery::new(eps, g.clone(), bound)?;
    if let Some(n) = empirical_metastability(&points, &q)?.n() {
        return Ok(Some(n));
    }
    let limit = if resolvents { RESOLVENT_LEN_CAP } else { WITNESS_LEN_CAP };
    let Some(cap) = window_cap(g, limit).filter(|&c| c > bound) else {
        return Err(CliError::CheckFailed(format!("no metastable index up to the bound {bound}")));
    };
    let total = cap.saturating_add(g.eval(cap)).saturating_add(1);
    let points = witness_points(problem, total, resolvents)?;
    match empirical_metastability(&points, &MetaQuery::new(eps, g.clone(), cap)?)?.n() {
        Some(n) => Ok(Some(n)),
        None => Err(CliError::CheckFailed(format!(
            "no metastable index up to {cap} although the bound is {bound}"
        ))),
    }
}

/// Least `n` with a small composite residual, with the residual at `n = bound`.
///
/// The run continues past `bound` when no index up to it qualifies.
pub fn asy_measure(problem: &Problem, eps: f64, bound: u64) -> Result<Option<(u64, f64)>> {
    if bound >= WITNESS_LEN_CAP {
        return Ok(None);
    }
    let run = |steps: u64| {
        iterate(
            problem.default_scheme(),
            &problem.ops,
            &problem.g,
            &problem.spec.schedule,
            &problem.spec.start,
            steps as usize,
        )
    };
    let traj = run(bound)?;
    let n = bound as usize;
    let at = traj.points[n].dist(&cyclic_composite(&problem.ops, n, &traj.points[n]));
    if let Some(w) = asy_witness(&traj.points, &problem.ops, eps) {
        return Ok(Some((w, at)));
    }
    match asy_witness(&run(WITNESS_LEN_CAP)?.points, &problem.ops, eps) {
        Some(w) => Ok(Some((w, at))),
        None => Err(CliError::CheckFailed(format!(
            "composite residual above {eps} for all {WITNESS_LEN_CAP} steps although the bound is {bound}"
        ))),
    }
}

pub fn certify(problem: &Problem, eps: f64, g: &GFunction, mode: CertMode) -> Result<Certificate> {
    let moduli = problem.moduli();
    let opts = problem.rate_options();
    let d = problem.spec.d;
    let tau = problem.tau;
    let label = problem.spec.label.clone();
    let need_single = |m: CertMode| -> Result<()> {
        if problem.family {
            Err(CliError::Usage(format!("mode {m} needs a single operator t")))
        } else {
            Ok(())
        }
    };
    let mut cert = match mode {
        CertMode::Single => {
            need_single(mode)?;
            moduli.phi2((1.0 - tau) * eps / (6.0 * d as f64)).map_err(RateError::from)?;
            let r = xi_single(eps, g, &moduli, d, tau, &opts)?;
            no_modulus_in(&r.bound)?;
            let mut c = Certificate::new(label, "single", eps, g.to_string(), r.bound.clone(), r.quantities());
            if let Some(b) = bound_u64(&r.bound) {
                if let Some(w) = meta_witness(problem, eps, g, b, true)? {
                    c = c.with_witness(w);
                }
            }
            c
        }
        CertMode::Full | CertMode::Quant => {
            need_single(mode)?;
            let fm = if mode == CertMode::Full { FullMode::Main2 } else { FullMode::MainQuant };
            let r = xi_full(eps, g, &moduli, d, tau, fm, &opts)?;
            no_modulus_in(&r.bound)?;
            let mut c = Certificate::new(label, fm.to_string(), eps, g.to_string(), r.bound.clone(), r.quantities())
                .with_eps_prime(r.eps_prime.clone());
            if let Some(b) = bound_u64(&r.bound) {
                if let Some(w) = meta_witness(problem, eps, g, b, false)? {
                    c = c.with_witness(w);
                }
            }
            c
        }
        CertMode::Family => {
            let rho = family_modulus(problem)?;
            let r = xi_family(eps, g, &moduli, &rho, d, tau, problem.n_family(), OmegaReading::Proof, &opts)?;
            no_modulus_in(&r.bound)?;
            let mut c = Certificate::new(label, "family", eps, g.to_string(), r.bound.clone(), r.quantities());
            if let Some(b) = bound_u64(&r.bound) {
                if let Some(w) = meta_witness(problem, eps, g, b, false)? {
                    c = c.with_witness(w);
                }
            }
            c
        }
        CertMode::Asy => {
            let n = problem.n_family();
            let b = asy_rate(eps, &moduli, d, n, None)?;
            let mut q = std::collections::BTreeMap::new();
            q.insert("chi_hat".to_string(), b.to_string());
            q.insert("n_family".to_string(), n.to_string());
            let mut c = Certificate::new(label, "asy", eps, g.to_string(), RateValue::finite(b), q);
            if let Some((w, at)) = asy_measure(problem, eps, b)? {
                c.quantities.insert("residual_at_bound".into(), format!("{at:e}"));
                c = c.with_witness(w);
            }
            c
        }
    };
    cert.quantities.insert("tau".into(), tau.to_string());
    Ok(cert)
}

pub fn cmd_certify(
    spec: &Path,
    eps: f64,
    g: &str,
    mode: CertMode,
    budget: Option<u64>,
    out: Option<&Path>,
) -> Result<()> {
    let mut problem = Problem::load(spec)?;
    if let Some(b) = budget {
        problem.spec.budget = b;
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(CliError::Usage(format!("epsilon = {eps} must be positive")));
    }
    let g: GFunction = g.parse().map_err(|e| CliError::Usage(format!("g: {e}")))?;
    let cert = certify(&problem, eps, &g, mode)?;
    let mut body = cert.to_json();
    body.push('\n');
    write_out(out, body.as_bytes())?;
    if !cert.consistent() {
        return Err(CliError::CheckFailed(format!(
            "empirical witness {:?} exceeds the bound {}",
            cert.empirical_witness, cert.bound
        )));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub epsilon: f64,
    pub budget: Option<u64>,
    pub seed: Option<u64>,
    pub cases: usize,
    pub steps: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { epsilon: 0.5, budget: None, seed: None, cases: 1000, steps: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub problem: String,
    pub seed: u64,
    pub budget: u64,
    pub suites: Vec<SuiteReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub audits: Vec<AuditRun>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch: Option<BranchOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub end_to_end: Option<EndToEnd>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confinement: Option<ConfinementReport>,
    pub passed: bool,
}

fn status_outcome(s: RunStatus, margin: Option<f64>) -> CaseOutcome {
    match s {
        RunStatus::Passed => CaseOutcome::Holds(margin.unwrap_or(0.0)),
        RunStatus::Violated => CaseOutcome::Violated(margin.unwrap_or(0.0)),
        RunStatus::BudgetExceeded | RunStatus::Inconclusive => CaseOutcome::Inconclusive,
    }
}

pub fn verify(problem: &Problem, suite: Suite, opts: &VerifyOptions) -> Result<VerifyReport> {
    let seed = opts.seed.unwrap_or(problem.spec.seed);
    let budget = opts.budget.unwrap_or(problem.spec.budget);
    let mut rep = VerifyReport {
        problem: problem.spec.label.clone(),
        seed,
        budget,
        suites: Vec::new(),
        audits: Vec::new(),
        branch: None,
        end_to_end: None,
        confinement: None,
        passed: true,
    };
    for s in suite.expand() {
        let mut sr = SuiteReport::new(s.name(), seed);
        match s {
            Suite::Lemmas => {
                for kind in LemmaKind::ALL {
                    sr.checks.push(check_lemma(kind, opts.cases, seed)?);
                }
            }
            Suite::Adversary => match problem.single_instance() {
                None => sr.notes.push("the tower audit needs a single operator; skipped for a family".into()),
                Some(inst) => {
                    let (check, runs) = run_audit_suite(std::slice::from_ref(&inst), &[opts.epsilon], 3, seed, budget)?;
                    sr.checks.push(check);
                    rep.audits = runs;
                    for r in &rep.audits {
                        if r.status == RunStatus::BudgetExceeded {
                            sr.notes.push(format!("{} run stopped by the budget of {budget}", r.strategy));
                        }
                    }
                    let b = run_branch_end_to_end(&inst, opts.epsilon, seed, budget)?;
                    let mut c = CheckReport::new("branch_end_to_end", seed);
                    c.record(status_outcome(b.status, b.value.map(|v| b.bound - v)));
                    sr.checks.push(c);
                    rep.branch = Some(b);
                    let g: GFunction = "n+1".parse().expect("valid expression");
                    let e = run_anticipating_end_to_end(&inst, opts.epsilon, &g, budget)?;
                    let mut c = CheckReport::new("anticipating_end_to_end", seed);
                    c.record(status_outcome(e.status, e.distance.map(|x| opts.epsilon - x)));
                    sr.checks.push(c);
                    rep.end_to_end = Some(e);
                }
            },
            Suite::Confinement => {
                let traj = iterate(
                    problem.default_scheme(),
                    &problem.ops,
                    &problem.g,
                    &problem.spec.schedule,
                    &problem.spec.start,
                    opts.steps,
                )?;
                let mode = if problem.family { ConfinementMode::DiamFamily } else { ConfinementMode::DiamSingle };
                let input = ConfinementInput {
                    traj: &traj,
                    ops: &problem.ops,
                    g: &problem.g,
                    v: &problem.spec.witness,
                    w: problem.spec.g_fixed_point.as_ref(),
                    d: problem.spec.d,
                    mode,
                };
                let mut c = CheckReport::new(format!("confinement_{mode}"), seed);
                match check_confinement(&input) {
                    Ok(r) => {
                        let slack = r.bound_iterate - r.max_iterate;
                        c.record(if r.passed { CaseOutcome::Holds(slack) } else { CaseOutcome::Violated(slack) });
                        rep.confinement = Some(r);
                    }
                    Err(VerifyError::Hypotheses(msg)) => {
                        c.record(CaseOutcome::PremiseFalse);
                        c.detail = format!("hypotheses rejected: {msg}");
                    }
                    Err(e) => return Err(e.into()),
                }
                sr.checks.push(c);
            }
            Suite::All => unreachable!("expanded above"),
        }
        rep.passed &= sr.passed();
        rep.suites.push(sr);
    }
    Ok(rep)
}

pub fn cmd_verify(spec: &Path, suite: Suite, opts: &VerifyOptions, out: Option<&Path>) -> Result<()> {
    let problem = Problem::load(spec)?;
    let rep = verify(&problem, suite, opts)?;
    write_out(out, &to_json(&rep))?;
    if !rep.passed {
        let failed: Vec<String> = rep
            .suites
            .iter()
            .flat_map(|s| s.checks.iter().filter(|c| !c.passed()).map(|c| c.check.clone()))
            .collect();
        return Err(CliError::CheckFailed(failed.join(", ")));
    }
    Ok(())
}
