//! Finite-dimensional Hilbert space model: points, nonexpansive operator
//! trees, contractions built from strongly monotone maps, and the condition
//! moduli used for finite families.

mod modulus;
mod monotone;
mod operator;
mod point;

use thiserror::Error;

pub use modulus::{
    bauschke_modulus, projection_sqne_modulus, sqne_chain_modulus, ConditionModulus, ContinuityFn,
    ModulusFn,
};
pub use monotone::{contraction_from_monotone, MonotoneMap, MonotoneOpSpec};
pub use operator::{
    apply_operator, fixed_point_residual, ClaimedClass, OperatorKind, OperatorSpec,
    FIXED_POINT_TOL,
};
pub use point::{inner, Matrix, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HilbertError {
    #[error("point has no coordinates")]
    EmptyPoint,
    #[error("coordinate {index} is not finite")]
    NonFinite { index: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("malformed operator: {0}")]
    Malformed(String),
    #[error("claimed Lipschitz constant {bound} violated: sampled ratio {ratio}")]
    ClaimViolated { ratio: f64, bound: f64 },
    #[error("fixed-point witness has residual {residual}")]
    WitnessNotFixed { residual: f64 },
    #[error("step size mu = {mu} outside (0, {upper})")]
    InvalidStepSize { mu: f64, upper: f64 },
    #[error("invalid monotone map: {0}")]
    InvalidMonotone(String),
    #[error("modulus returned non-positive value {value}")]
    NonPositiveModulus { value: f64 },
    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("family size must be at least 1")]
    EmptyFamily,
    #[error("fixed-point search did not converge: {0}")]
    NotConverged(String),
}
