use num_bigint::BigUint;
use num_traits::One;

use super::majorant::{Evaluator, MajorantFn};
use super::RateError;

fn sq16(psi: &BigUint, d: u64, ev: &Evaluator) -> Result<BigUint, RateError> {
    if psi.bits().saturating_mul(2) > ev.budget().bit_cap {
        return Err(RateError::BudgetExceeded {
            expr: "16d*psi^2".into(),
            reason: format!("value exceeds 2^{} bits", ev.budget().bit_cap),
        });
    }
    ev.check_size(BigUint::from(16 * d) * psi * psi, &"16d*psi^2")
}

/// `φ*(g) = max{ψ*_i : 1 ≤ i ≤ n}` with `ψ*_1 = 1` and
/// `ψ*_{i+1} = max{g(16dψ*_i²), 16dψ*_i²}`.
pub fn phi_star(
    g: &dyn Fn(&BigUint) -> Result<BigUint, RateError>,
    d: u64,
    n: u64,
    ev: &Evaluator,
) -> Result<BigUint, RateError> {
    let mut psi = BigUint::one();
    let mut best = psi.clone();
    for _ in 1..n {
        ev.charge(&"phi*")?;
        let m = sq16(&psi, d, ev)?;
        psi = g(&m)?.max(m);
        best = best.max(psi.clone());
    }
    Ok(best)
}

/// `f̂_j(k)`: `f̂_0 = f̃` and `f̂_{j+1}(k) = φ*(m ↦ max{f̂_j(m), k})`.
pub fn fhat(f: &MajorantFn, d: u64, n: u64, j: u64, k: &BigUint, ev: &Evaluator) -> Result<BigUint, RateError> {
    let ft = f.clone().tilde(d);
    fhat_rec(&ft, d, n, j, k, ev)
}

fn fhat_rec(ft: &MajorantFn, d: u64, n: u64, j: u64, k: &BigUint, ev: &Evaluator) -> Result<BigUint, RateError> {
    if j == 0 {
        return ev.eval(ft, k);
    }
    let g = |m: &BigUint| -> Result<BigUint, RateError> { Ok(fhat_rec(ft, d, n, j - 1, m, ev)?.max(k.clone())) };
    phi_star(&g, d, n, ev)
}
