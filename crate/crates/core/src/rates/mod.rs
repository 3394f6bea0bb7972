//! Exact evaluation of the metastability and asymptotic-regularity bounds.
//!
//! Tower values are arbitrary-precision naturals; accuracies such as `ε̃`
//! and `Ω_d` are exact rationals. Evaluation is budgeted: a value that needs
//! more than the allowed number of function applications, or more than the
//! allowed number of bits, comes back as [`RateValue::BudgetExceeded`] with
//! the unevaluated expression.

mod certificate;
mod chain;
mod formulas;
mod majorant;

use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::EngineError;
use crate::hilbert::HilbertError;
use crate::schedules::ModulusError;

pub use certificate::{CertStatus, Certificate};
pub use chain::{fhat, phi_star};
pub use formulas::{
    asy_rate, k_tower, omega_d, omega_m, xi_family, xi_full, xi_single, FamilyResult, FullMode,
    FullResult, OmegaReading, OmegaValue, RateOptions, SingleResult, TowerOverrides, TowerValue,
};
pub use majorant::{build_majorant_chain, CustomFn, EvalPath, Evaluator, MajorantFn, RateBudget};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RateError {
    #[error("budget exceeded evaluating {expr}: {reason}")]
    BudgetExceeded { expr: String, reason: String },
    #[error("no {kind} modulus: {reason}")]
    NoModulus { kind: String, reason: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl From<ModulusError> for RateError {
    fn from(e: ModulusError) -> Self {
        match e {
            ModulusError::NoModulus { kind, reason } => RateError::NoModulus { kind: kind.into(), reason },
            ModulusError::Overflow { kind } => RateError::BudgetExceeded {
                expr: kind.into(),
                reason: "modulus value exceeds 64-bit indices".into(),
            },
            ModulusError::InvalidArgument(s) => RateError::InvalidArgument(s),
        }
    }
}

impl From<EngineError> for RateError {
    fn from(e: EngineError) -> Self {
        RateError::InvalidArgument(e.to_string())
    }
}

impl From<HilbertError> for RateError {
    fn from(e: HilbertError) -> Self {
        match e {
            HilbertError::InvalidEpsilon(x) => RateError::BudgetExceeded {
                expr: "rho".into(),
                reason: format!("modulus argument {x:e} not representable"),
            },
            HilbertError::NonPositiveModulus { value } if value == 0.0 => RateError::BudgetExceeded {
                expr: "rho".into(),
                reason: "modulus value underflows".into(),
            },
            other => RateError::InvalidArgument(other.to_string()),
        }
    }
}

/// An evaluated bound or the reason it has no finite value here.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateValue {
    Finite {
        #[serde(with = "decimal")]
        value: BigUint,
    },
    BudgetExceeded { expr: String, reason: String },
    NoModulus { reason: String },
}

impl RateValue {
    pub fn finite(v: impl Into<BigUint>) -> Self {
        RateValue::Finite { value: v.into() }
    }

    /// Folds budget and modulus failures into markers; other errors pass through.
    pub fn from_result(r: Result<BigUint, RateError>) -> Result<Self, RateError> {
        match r {
            Ok(value) => Ok(RateValue::Finite { value }),
            Err(RateError::BudgetExceeded { expr, reason }) => Ok(RateValue::BudgetExceeded { expr, reason }),
            Err(RateError::NoModulus { kind, reason }) => {
                Ok(RateValue::NoModulus { reason: format!("{kind}: {reason}") })
            }
            Err(e) => Err(e),
        }
    }

    pub fn value(&self) -> Option<&BigUint> {
        match self {
            RateValue::Finite { value } => Some(value),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value().is_some()
    }
}

impl fmt::Display for RateValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateValue::Finite { value } => write!(f, "{value}"),
            RateValue::BudgetExceeded { expr, reason } => write!(f, "budget_exceeded[{reason}]: {expr}"),
            RateValue::NoModulus { reason } => write!(f, "no_modulus: {reason}"),
        }
    }
}

pub(crate) mod decimal {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_str_radix(10))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
