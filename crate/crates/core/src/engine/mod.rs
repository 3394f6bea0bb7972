//! Solution functionals for the ε-projection problem and the ε-Picard tower.
//!
//! Functionals are closures over points and threshold functions `φ: C → (0,1]`.
//! Threshold values that underflow to `0.0` stand for positive infinitesimals:
//! a residual `r` is admitted by a value `φ` iff `r < φ` or `r` is numerically
//! zero (`r ≤ FIXED_POINT_TOL`).

mod adversary;
mod params;
mod projection;
mod tower;

use std::cell::{Cell, RefCell};
use std::fmt;
use std::rc::Rc;
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::hilbert::{HilbertError, Point, FIXED_POINT_TOL};
use crate::iterates::IterateError;

pub use adversary::{
    anticipating_adversary, anticipating_with_probe, branch_adversary, constant_adversary,
    random_adversary, AnticipatingParams, AnticipatingProbe, GFn,
};
pub use params::{i0_exact, tower_constants, tower_params, TowerParams};
pub(crate) use adversary::sample_ball;
pub(crate) use params::{ceil_nat, rat, rat_to_f64};
pub use projection::{check_projection_claim, eps_projection, EpsProjectionResult};
pub use tower::{a_predicate, audit, AuditReport, ChainRecord, TowerFailure, TowerResult, TowerTrace};

pub const DEFAULT_BUDGET: u64 = 1_000_000;
/// Additive slack of the post-hoc audit.
pub const AUDIT_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("evaluation budget exceeded ({used} of {limit} counterfunction calls)")]
    BudgetExceeded { used: u64, limit: u64 },
    #[error("candidate {index} violates the fixed-point conjunct: {reason}")]
    PreconditionViolated { index: u64, reason: String },
    #[error("no candidate among {n} satisfied the claim")]
    Exhausted { n: u64 },
    #[error("{what} = {value} outside its range")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error(transparent)]
    Iterate(#[from] IterateError),
}

/// `true` iff the residual `r` is below the threshold value `value`.
pub fn admits(value: f64, r: f64) -> bool {
    r <= FIXED_POINT_TOL || r < value
}

/// Shared counter of counterfunction evaluations.
#[derive(Debug)]
pub struct Budget {
    limit: u64,
    used: Cell<u64>,
}

impl Budget {
    pub fn new(limit: u64) -> Self {
        Budget { limit, used: Cell::new(0) }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn used(&self) -> u64 {
        self.used.get()
    }

    pub fn charge(&self) -> Result<(), EngineError> {
        let u = self.used.get();
        if u >= self.limit {
            return Err(EngineError::BudgetExceeded { used: u, limit: self.limit });
        }
        self.used.set(u + 1);
        Ok(())
    }
}

static NEXT_PHI_ID: AtomicU64 = AtomicU64::new(1);

type PhiInner = Rc<dyn Fn(&Point) -> Result<f64, EngineError>>;

/// A threshold function `φ: C → [0,1]`.
#[derive(Clone)]
pub struct Phi {
    id: u64,
    f: PhiInner,
    label: Rc<str>,
}

impl fmt::Debug for Phi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Phi#{}({})", self.id, self.label)
    }
}

impl Phi {
    pub fn new(label: &str, f: impl Fn(&Point) -> Result<f64, EngineError> + 'static) -> Self {
        Phi { id: NEXT_PHI_ID.fetch_add(1, Ordering::Relaxed), f: Rc::new(f), label: label.into() }
    }

    pub fn constant(c: f64) -> Self {
        Phi::new("const", move |_| Ok(c))
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, v: &Point) -> Result<f64, EngineError> {
        let x = (self.f)(v)?;
        check_unit("phi", x)
    }
}

fn check_unit(what: &'static str, x: f64) -> Result<f64, EngineError> {
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(EngineError::OutOfRange { what, value: x })
    }
}

pub type DeltaFn = Rc<dyn Fn(&Point, &Phi) -> Result<f64, EngineError>>;
pub type VFn = Rc<dyn Fn(&Point, &Phi) -> Result<Point, EngineError>>;

/// A counterfunction pair `(Δ, V)`.
#[derive(Clone)]
pub struct Counterfunctions {
    pub delta: DeltaFn,
    pub v: VFn,
    pub label: String,
}

impl fmt::Debug for Counterfunctions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Counterfunctions({})", self.label)
    }
}

impl Counterfunctions {
    pub fn new(
        label: impl Into<String>,
        delta: impl Fn(&Point, &Phi) -> Result<f64, EngineError> + 'static,
        v: impl Fn(&Point, &Phi) -> Result<Point, EngineError> + 'static,
    ) -> Self {
        Counterfunctions { delta: Rc::new(delta), v: Rc::new(v), label: label.into() }
    }

    /// `Δ ≡ delta`, `V ≡ point`.
    pub fn constant(delta: f64, point: Point) -> Self {
        Counterfunctions::new(format!("const({delta})"), move |_, _| Ok(delta), move |_, _| Ok(point.clone()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TranscriptEntry {
    pub level: usize,
    pub call: &'static str,
    pub point_hash: u64,
    pub output: String,
}

impl fmt::Display for TranscriptEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "level={} call={} point={:016x} -> {}", self.level, self.call, self.point_hash, self.output)
    }
}

/// Evaluation context: budget plus optional transcript.
#[derive(Clone, Debug)]
pub struct Engine {
    budget: Rc<Budget>,
    transcript: Option<Rc<RefCell<Vec<TranscriptEntry>>>>,
}

impl Default for Engine {
    fn default() -> Self {
        Engine::new(DEFAULT_BUDGET)
    }
}

impl Engine {
    pub fn new(limit: u64) -> Self {
        Engine { budget: Rc::new(Budget::new(limit)), transcript: None }
    }

    pub fn with_transcript(mut self) -> Self {
        self.transcript = Some(Rc::new(RefCell::new(Vec::new())));
        self
    }

    pub fn budget(&self) -> &Budget {
        &self.budget
    }

    pub fn transcript(&self) -> Option<Vec<TranscriptEntry>> {
        self.transcript.as_ref().map(|t| t.borrow().clone())
    }

    /// The transcript as one line per entry.
    pub fn transcript_text(&self) -> String {
        self.transcript()
            .unwrap_or_default()
            .iter()
            .map(|e| format!("{e}\n"))
            .collect()
    }

    pub(crate) fn record(&self, level: usize, call: &'static str, p: &Point, output: impl FnOnce() -> String) {
        if let Some(t) = &self.transcript {
            t.borrow_mut().push(TranscriptEntry { level, call, point_hash: p.bit_hash(), output: output() });
        }
    }

    pub(crate) fn call_delta(&self, level: usize, cf: &Counterfunctions, u: &Point, phi: &Phi) -> Result<f64, EngineError> {
        self.budget.charge()?;
        let x = check_unit("delta", (cf.delta)(u, phi)?)?;
        self.record(level, "delta", u, || format!("{x:e}"));
        Ok(x)
    }

    pub(crate) fn call_v(&self, level: usize, cf: &Counterfunctions, u: &Point, phi: &Phi) -> Result<Point, EngineError> {
        self.budget.charge()?;
        let p = (cf.v)(u, phi)?;
        if p.dim() != u.dim() {
            return Err(HilbertError::DimensionMismatch { expected: u.dim(), found: p.dim() }.into());
        }
        self.record(level, "v", u, || p.to_string());
        Ok(p)
    }
}
