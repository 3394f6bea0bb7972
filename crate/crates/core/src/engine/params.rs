use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::EngineError;

/// Exact constants of the tower for given `(ε, τ, d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TowerParams {
    pub eps: f64,
    pub tau: f64,
    pub d: u64,
    /// `ε̃ = (1−τ)²ε/(6+8d)`.
    pub eps_tilde_exact: BigRational,
    pub eps_tilde: f64,
    pub i0: u64,
    /// `ε̃⁴/(8d²)`.
    pub acc: f64,
    /// `ε̃²/(6d²)`.
    pub weight: f64,
    /// `⌈8d⁴/ε̃⁴⌉`.
    pub n_eps_tilde: BigUint,
}

pub(crate) fn rat(x: f64, what: &'static str) -> Result<BigRational, EngineError> {
    BigRational::from_float(x).ok_or(EngineError::OutOfRange { what, value: x })
}

pub(crate) fn rat_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub(crate) fn ceil_nat(r: &BigRational) -> BigUint {
    let c = r.ceil().to_integer();
    if c.is_negative() {
        BigUint::zero()
    } else {
        c.to_biguint().expect("non-negative")
    }
}

/// Least `k ≥ 0` with `τ^{k+1} ≤ target`, compared exactly.
fn least_power_index(tau: &BigRational, target: &BigRational) -> u64 {
    let holds = |k: u64| num_traits::pow::pow(tau.clone(), (k + 1) as usize) <= *target;
    let t = rat_to_f64(tau);
    let g = rat_to_f64(target);
    let mut k = ((g.ln() / t.ln()) - 1.0).ceil().max(0.0) as u64;
    while k > 0 && holds(k - 1) {
        k -= 1;
    }
    while !holds(k) {
        k += 1;
    }
    k
}

/// `i₀ = ⌈log_τ(ε̃/6d²) − 1⌉`, at least 1; `τ = 0` gives 1.
pub fn i0_exact(eps_tilde: &BigRational, tau: &BigRational, d: u64) -> u64 {
    if tau.is_zero() {
        return 1;
    }
    let dd = BigRational::from_integer((6 * d * d).into());
    least_power_index(tau, &(eps_tilde / dd)).max(1)
}

/// Exact `(ε̃, i₀, ⌈8d⁴/ε̃⁴⌉)` for rational `ε` and `τ`.
pub fn tower_constants(eps: &BigRational, tau: &BigRational, d: u64) -> (BigRational, u64, BigUint) {
    let one = BigRational::one();
    let denom = BigRational::from_integer((6 + 8 * d).into());
    let et = (&one - tau) * (&one - tau) * eps / denom;
    let d2 = BigRational::from_integer((d * d).into());
    let et2 = &et * &et;
    let n = BigRational::from_integer(8.into()) * &d2 * &d2 / (&et2 * &et2);
    let i0 = i0_exact(&et, tau, d);
    (et, i0, ceil_nat(&n))
}

pub fn tower_params(eps: f64, tau: f64, d: u64) -> Result<TowerParams, EngineError> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(EngineError::OutOfRange { what: "eps", value: eps });
    }
    if !(0.0..1.0).contains(&tau) {
        return Err(EngineError::OutOfRange { what: "tau", value: tau });
    }
    if d == 0 {
        return Err(EngineError::InvalidArgument("d must be at least 1".into()));
    }
    let t = rat(tau, "tau")?;
    let (eps_tilde_exact, i0, n_eps_tilde) = tower_constants(&rat(eps, "eps")?, &t, d);
    let d2 = BigRational::from_integer((d * d).into());
    let et2 = &eps_tilde_exact * &eps_tilde_exact;
    let acc = &et2 * &et2 / (BigRational::from_integer(8.into()) * &d2);
    let weight = &et2 / (BigRational::from_integer(6.into()) * &d2);
    Ok(TowerParams {
        eps,
        tau,
        d,
        eps_tilde: rat_to_f64(&eps_tilde_exact),
        i0,
        acc: rat_to_f64(&acc),
        weight: rat_to_f64(&weight),
        n_eps_tilde,
        eps_tilde_exact,
    })
}
