use serde::{Deserialize, Serialize};

use super::VerifyError;
use crate::gfun::GFunction;
use crate::hilbert::{OperatorSpec, Point};
use crate::iterates::cyclic_composite;

#[derive(Clone, Debug)]
pub struct MetaQuery {
    pub eps: f64,
    pub g: GFunction,
    pub cap: u64,
}

impl MetaQuery {
    pub fn new(eps: f64, g: GFunction, cap: u64) -> Result<Self, VerifyError> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(VerifyError::InvalidQuery(format!("epsilon = {eps} must be positive")));
        }
        if cap < 1 {
            return Err(VerifyError::InvalidQuery("cap must be at least 1".into()));
        }
        Ok(MetaQuery { eps, g, cap })
    }

    /// Points needed to evaluate every window up to the cap.
    pub fn required_len(&self) -> usize {
        let far = (0..=self.cap).map(|n| n.saturating_add(self.g.eval(n))).max().unwrap_or(0);
        usize::try_from(far).unwrap_or(usize::MAX).saturating_add(1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetaOutcome {
    Found { n: u64 },
    Exhausted { cap: u64 },
}

impl MetaOutcome {
    pub fn n(&self) -> Option<u64> {
        match self {
            MetaOutcome::Found { n } => Some(*n),
            MetaOutcome::Exhausted { .. } => None,
        }
    }
}

fn window_fits(points: &[Point], lo: usize, hi: usize, eps: f64) -> bool {
    for i in lo..=hi {
        for j in i + 1..=hi {
            if points[i].dist(&points[j]) > eps {
                return false;
            }
        }
    }
    true
}

/// Least `n ≤ cap` with `max_{i,j ∈ [n, n+g(n)]} ‖u_i − u_j‖ ≤ ε`, by enumeration.
///
/// The length check is lazy: a short trajectory is only an error once a
/// window past its end is actually needed.
pub fn empirical_metastability(points: &[Point], q: &MetaQuery) -> Result<MetaOutcome, VerifyError> {
    for n in 0..=q.cap {
        let hi = n.saturating_add(q.g.eval(n));
        let hi = usize::try_from(hi).unwrap_or(usize::MAX);
        if hi >= points.len() {
            return Err(VerifyError::TooShort { len: points.len(), required: q.required_len() });
        }
        if window_fits(points, n as usize, hi, q.eps) {
            return Ok(MetaOutcome::Found { n });
        }
    }
    Ok(MetaOutcome::Exhausted { cap: q.cap })
}

/// Least `n` with `‖u_n − T_{[n+N]}⋯T_{[n+1]}u_n‖ ≤ ε`.
pub fn asy_witness(points: &[Point], ops: &[OperatorSpec], eps: f64) -> Option<u64> {
    if ops.is_empty() {
        return None;
    }
    points
        .iter()
        .enumerate()
        .find(|(n, u)| u.dist(&cyclic_composite(ops, *n, u)) <= eps)
        .map(|(n, _)| n as u64)
}
