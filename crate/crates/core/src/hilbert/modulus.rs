use std::fmt;
use std::sync::Arc;

use super::HilbertError;

/// `(d, ε) ↦ value`.
pub type ModulusFn = Arc<dyn Fn(u64, f64) -> f64 + Send + Sync>;
/// Modulus of uniform continuity `ε ↦ α(ε)`.
pub type ContinuityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A modulus `ρ̂(d, ε)` for the family condition, or a transported version of it.
#[derive(Clone)]
pub struct ConditionModulus {
    f: ModulusFn,
    n: usize,
    label: String,
}

impl fmt::Debug for ConditionModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConditionModulus")
            .field("label", &self.label)
            .field("n", &self.n)
            .finish()
    }
}

impl ConditionModulus {
    pub fn new(label: impl Into<String>, n: usize, f: ModulusFn) -> Result<Self, HilbertError> {
        if n == 0 {
            return Err(HilbertError::EmptyFamily);
        }
        Ok(ConditionModulus { f, n, label: label.into() })
    }

    /// `ρ̂(d, ε) = ε`.
    pub fn identity(n: usize) -> Result<Self, HilbertError> {
        Self::new("identity", n, Arc::new(|_, e| e))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, d: u64, eps: f64) -> Result<f64, HilbertError> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(HilbertError::InvalidEpsilon(eps));
        }
        let v = (self.f)(d, eps);
        if !(v > 0.0) || v.is_nan() {
            return Err(HilbertError::NonPositiveModulus { value: v });
        }
        Ok(v)
    }
}

/// Default SQNE modulus for metric projections, `ω(d, ε) = ε²/(2d)`.
pub fn projection_sqne_modulus() -> ModulusFn {
    Arc::new(|d, e| e * e / (2.0 * d.max(1) as f64))
}

/// Modulus for a composition of SQNE maps: `ρ(d, ε) = χ_d(N−1, ε)` with
/// `χ_d(0, ε) = min{α(ε/2), ε}` and
/// `χ_d(n+1, ε) = min{ω(d, χ_d(n, ε)/2), χ_d(n, ε)/2}`, `ω = min_i ω_i`.
pub fn sqne_chain_modulus(
    omegas: Vec<ModulusFn>,
    alpha: ContinuityFn,
    n: usize,
) -> Result<ConditionModulus, HilbertError> {
    if n == 0 {
        return Err(HilbertError::EmptyFamily);
    }
    if omegas.is_empty() && n > 1 {
        return Err(HilbertError::Malformed("no SQNE moduli for a family of size > 1".into()));
    }
    let omegas = Arc::new(omegas);
    let f: ModulusFn = Arc::new(move |d, eps| {
        let a = alpha(eps / 2.0);
        if !(a > 0.0) {
            return a;
        }
        let mut chi = a.min(eps);
        for _ in 1..n {
            let half = chi / 2.0;
            let mut w = f64::INFINITY;
            for om in omegas.iter() {
                let v = om(d, half);
                if !(v > 0.0) {
                    return v;
                }
                w = w.min(v);
            }
            chi = w.min(half);
        }
        chi
    });
    ConditionModulus::new(format!("sqne_chain(N={n})"), n, f)
}

/// `ρ(d, ε) = ρ̂(d, ε/(2N+1))`.
pub fn bauschke_modulus(rho_hat: &ConditionModulus, n: usize) -> Result<ConditionModulus, HilbertError> {
    if n == 0 {
        return Err(HilbertError::EmptyFamily);
    }
    let inner = rho_hat.f.clone();
    let k = (2 * n + 1) as f64;
    ConditionModulus::new(
        format!("bauschke({}, N={n})", rho_hat.label),
        n,
        Arc::new(move |d, eps| inner(d, eps / k)),
    )
}
