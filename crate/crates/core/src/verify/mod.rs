//! Empirical validation: metastability witnesses, re-enactment of the
//! quantitative lemmas on concrete instances, and adversarial runs of the
//! Picard tower.

mod adversary;
mod confinement;
pub mod instances;
mod lemmas;
mod meta;
mod vip;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::EngineError;
use crate::hilbert::HilbertError;
use crate::iterates::IterateError;
use crate::rates::RateError;

pub use adversary::{
    adversary_suite, run_anticipating_end_to_end, run_audit, run_audit_suite, run_branch_end_to_end,
    AuditRun, BranchOutcome, EndToEnd, RunStatus, Strategy, ANTICIPATING_CAP,
};
pub use confinement::{check_confinement, ConfinementInput, ConfinementMode, ConfinementReport};
pub use lemmas::{
    check_lemma, core_case, fact_sum_case, perm_case, perm_instances, perm_negative, rotated_composite,
    sharp_line_modulus, subseq_case, switch_case, vip_modulus_case, CaseOutcome, CorePremises, LemmaEval,
    LemmaKind, PermInstance,
};
pub use meta::{asy_witness, empirical_metastability, MetaOutcome, MetaQuery};
pub use vip::{check_vip_certificate, VipReport};

/// Seed used when a check is run without an explicit one.
pub const DEFAULT_SEED: u64 = 0x00c0_ffee;
/// Additive slack on every measured conclusion.
pub const CHECK_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("trajectory has {len} points; window needs {required}")]
    TooShort { len: usize, required: usize },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("hypotheses not satisfied: {0}")]
    Hypotheses(String),
    #[error("no admissible samples generated")]
    NoSamples,
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error(transparent)]
    Iterate(#[from] IterateError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Rate(#[from] RateError),
}

/// Outcome of one randomized or instance check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub seed: u64,
    pub cases: u64,
    pub premise_held: u64,
    pub violations: u64,
    /// Cases whose side conditions failed.
    pub inconclusive: u64,
    /// Smallest slack of the conclusion over the cases where the premises held.
    pub min_margin: Option<f64>,
    /// Whether the engineered premise-breaking case violated the conclusion.
    pub negative_case: Option<bool>,
    pub detail: String,
}

impl CheckReport {
    pub fn new(check: impl Into<String>, seed: u64) -> Self {
        CheckReport {
            check: check.into(),
            seed,
            cases: 0,
            premise_held: 0,
            violations: 0,
            inconclusive: 0,
            min_margin: None,
            negative_case: None,
            detail: String::new(),
        }
    }

    pub fn record(&mut self, o: CaseOutcome) {
        self.cases += 1;
        match o {
            CaseOutcome::Inconclusive => self.inconclusive += 1,
            CaseOutcome::PremiseFalse => {}
            CaseOutcome::Holds(m) | CaseOutcome::Violated(m) => {
                self.premise_held += 1;
                self.min_margin = Some(self.min_margin.map_or(m, |x| x.min(m)));
                if matches!(o, CaseOutcome::Violated(_)) {
                    self.violations += 1;
                }
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0 && self.negative_case != Some(false)
    }
}

/// Reports of one suite run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub checks: Vec<CheckReport>,
    pub notes: Vec<String>,
}

impl SuiteReport {
    pub fn new(suite: impl Into<String>, seed: u64) -> Self {
        SuiteReport { suite: suite.into(), seed, checks: Vec::new(), notes: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckReport::passed)
    }
}
