use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{VerifyError, CHECK_SLACK};
use crate::hilbert::{OperatorSpec, Point};
use crate::iterates::{resolvent_path, Trajectory};

const WITNESS_TOL: f64 = 1e-9;
const RESOLVENT_TOL: f64 = 1e-12;
const RESOLVENT_SAMPLES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfinementMode {
    /// One operator: `‖u_0 − v‖ ≤ d/2`.
    DiamSingle,
    /// A cyclic family: `‖u_0 − v‖ ≤ d/4`.
    DiamFamily,
}

impl fmt::Display for ConfinementMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConfinementMode::DiamSingle => "diam_single",
            ConfinementMode::DiamFamily => "diam_family",
        })
    }
}

impl FromStr for ConfinementMode {
    type Err = VerifyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "diam_single" => Ok(ConfinementMode::DiamSingle),
            "diam_family" => Ok(ConfinementMode::DiamFamily),
            _ => Err(VerifyError::InvalidQuery(format!("unknown confinement mode '{s}'"))),
        }
    }
}

pub struct ConfinementInput<'a> {
    pub traj: &'a Trajectory,
    pub ops: &'a [OperatorSpec],
    pub g: &'a OperatorSpec,
    /// Common fixed point of the `T_i`.
    pub v: &'a Point,
    /// Fixed point of `G`.
    pub w: Option<&'a Point>,
    pub d: u64,
    pub mode: ConfinementMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfinementReport {
    pub mode: ConfinementMode,
    pub d: u64,
    pub tau: f64,
    pub steps: usize,
    pub max_iterate: f64,
    pub bound_iterate: f64,
    /// Over sampled resolvent points; single mode only.
    pub max_resolvent: Option<f64>,
    pub max_g_resolvent: Option<f64>,
    /// Over `G(T_{[n+1]} u_n)`.
    pub max_g_image: f64,
    pub bound_g_image: f64,
    /// Over `G u_n`; family mode only.
    pub max_g_iterate: Option<f64>,
    pub passed: bool,
}

/// Checks the confinement hypotheses, then measures how far the run strays from `v`.
///
/// Iterates and (single mode) resolvent points and their `G`-images must stay
/// within `d/2` of `v`. The image `G(Tu_n)` is bounded by `τd/2 + d/4`, which
/// is at most `d/2` exactly when `τ ≤ 1/2`; the larger value is used otherwise.
pub fn check_confinement(input: &ConfinementInput<'_>) -> Result<ConfinementReport, VerifyError> {
    let ConfinementInput { traj, ops, g, v, w, d, mode } = *input;
    if ops.is_empty() {
        return Err(VerifyError::InvalidQuery("no operators supplied".into()));
    }
    if d == 0 {
        return Err(VerifyError::InvalidQuery("d must be at least 1".into()));
    }
    let w = w.ok_or_else(|| VerifyError::Hypotheses("fixed point w of G not supplied; hypotheses unverifiable".into()))?;
    let tau = g.tau().ok_or_else(|| VerifyError::InvalidQuery("G must claim a contraction factor".into()))?;
    let df = d as f64;
    let u0 = traj.points.first().ok_or_else(|| VerifyError::InvalidQuery("empty trajectory".into()))?;

    for (i, t) in ops.iter().enumerate() {
        let r = t.apply(v)?.dist(v);
        if r > WITNESS_TOL {
            return Err(VerifyError::Hypotheses(format!("v is not fixed by T_{} (residual {r:e})", i + 1)));
        }
    }
    let rw = g.apply(w)?.dist(w);
    if rw > WITNESS_TOL {
        return Err(VerifyError::Hypotheses(format!("w is not fixed by G (residual {rw:e})")));
    }
    let start_bound = match mode {
        ConfinementMode::DiamSingle => df / 2.0,
        ConfinementMode::DiamFamily => df / 4.0,
    };
    let checks = [
        ("||u_0 - v||", u0.dist(v), start_bound),
        ("||v - Gv||", v.dist(&g.apply(v)?), df * (1.0 - tau) / 4.0),
        ("||v - w||", v.dist(w), df / (4.0 * (1.0 + tau))),
    ];
    for (what, val, bound) in checks {
        if val > bound + CHECK_SLACK {
            return Err(VerifyError::Hypotheses(format!("{what} = {val} exceeds {bound}")));
        }
    }

    let n_ops = ops.len();
    let mut max_iterate: f64 = 0.0;
    let mut max_g_image: f64 = 0.0;
    let mut max_g_iterate: f64 = 0.0;
    for (n, u) in traj.points.iter().enumerate() {
        max_iterate = max_iterate.max(u.dist(v));
        let tu = ops[n % n_ops].eval(u);
        max_g_image = max_g_image.max(g.eval(&tu).dist(v));
        max_g_iterate = max_g_iterate.max(g.eval(u).dist(v));
    }
    let half = df / 2.0;
    let bound_iterate = start_bound;
    let (bound_g_image, max_resolvent, max_g_resolvent, max_g_iterate) = match mode {
        ConfinementMode::DiamSingle => {
            let last = traj.points.len().max(2) as u64 - 1;
            let mut idx: Vec<u64> = (0..RESOLVENT_SAMPLES as u64)
                .map(|k| ((last as f64).powf(k as f64 / (RESOLVENT_SAMPLES - 1) as f64)).round() as u64)
                .collect();
            idx.dedup();
            let path = resolvent_path(&ops[0], g, &traj.schedule, &idx, RESOLVENT_TOL)?;
            let mr = path.iter().map(|p| p.dist(v)).fold(0.0, f64::max);
            let mg = path.iter().map(|p| g.eval(p).dist(v)).fold(0.0, f64::max);
            (half.max(tau * half + df / 4.0), Some(mr), Some(mg), None)
        }
        ConfinementMode::DiamFamily => (half, None, None, Some(max_g_iterate)),
    };
    let ok = |x: f64, b: f64| x <= b + CHECK_SLACK;
    let passed = ok(max_iterate, bound_iterate)
        && ok(max_g_image, bound_g_image)
        && max_resolvent.map_or(true, |x| ok(x, half))
        && max_g_resolvent.map_or(true, |x| ok(x, half))
        && max_g_iterate.map_or(true, |x| ok(x, half));
    Ok(ConfinementReport {
        mode,
        d,
        tau,
        steps: traj.len().saturating_sub(1),
        max_iterate,
        bound_iterate,
        max_resolvent,
        max_g_resolvent,
        max_g_image,
        bound_g_image,
        max_g_iterate,
        passed,
    })
}
