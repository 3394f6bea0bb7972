use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CaseOutcome, CheckReport, VerifyError, CHECK_SLACK};
use crate::engine::sample_ball;
use crate::hilbert::{OperatorKind, OperatorSpec, Point, FIXED_POINT_TOL};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VipReport {
    pub report: CheckReport,
    /// Largest `⟨Gu − u, v − u⟩` seen over the admitted samples.
    pub max_value: f64,
    pub worst: Option<Point>,
}

impl VipReport {
    pub fn passed(&self) -> bool {
        self.report.passed()
    }
}

/// Samples near-fixed points `v` of the family and checks
/// `⟨Gu − u, v − u⟩ ≤ ε` whenever `max_i ‖T_i v − v‖ ≤ ε′`.
///
/// Samples are drawn uniformly from the ball of `radius` around `u`, moved
/// onto the common fixed set and perturbed by at most `ε′/2`.
#[allow(clippy::too_many_arguments)]
pub fn check_vip_certificate(
    g: &OperatorSpec,
    u: &Point,
    ops: &[OperatorSpec],
    eps: f64,
    eps_prime: f64,
    samples: usize,
    radius: f64,
    seed: u64,
) -> Result<VipReport, VerifyError> {
    if ops.is_empty() {
        return Err(VerifyError::InvalidQuery("no operators supplied".into()));
    }
    if !(eps > 0.0) || !(eps_prime >= 0.0) {
        return Err(VerifyError::InvalidQuery(format!("eps = {eps}, eps' = {eps_prime}")));
    }
    let common = if ops.len() == 1 {
        ops[0].clone()
    } else {
        OperatorSpec::nonexpansive(OperatorKind::Compose { ops: ops.iter().map(|o| o.kind().clone()).collect() })?
    };
    let gu = g.apply(u)?;
    let dir = gu.sub(u);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = CheckReport::new("vip_certificate", seed);
    let mut max_value = f64::NEG_INFINITY;
    let mut worst = None;
    for _ in 0..samples {
        let y = sample_ball(&mut rng, u, radius);
        let p = common.nearest_fixed_point(&y)?;
        let v = if eps_prime > 0.0 {
            let r = rng.gen_range(0.0..=eps_prime / 2.0);
            sample_ball(&mut rng, &p, r)
        } else {
            p
        };
        let res = ops.iter().map(|t| t.eval(&v).dist(&v)).fold(0.0, f64::max);
        if res > eps_prime + FIXED_POINT_TOL {
            continue;
        }
        let val = dir.dot(&v.sub(u));
        if val > max_value {
            max_value = val;
            worst = Some(v.clone());
        }
        let margin = eps - val;
        rep.record(if margin >= -CHECK_SLACK { CaseOutcome::Holds(margin) } else { CaseOutcome::Violated(margin) });
    }
    if rep.cases == 0 {
        return Err(VerifyError::NoSamples);
    }
    rep.detail = format!("eps = {eps}, eps' = {eps_prime}, radius = {radius}, max inner product {max_value:e}");
    Ok(VipReport { report: rep, max_value, worst })
}
