use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::majorant::{EvalPath, Evaluator, MajorantFn, RateBudget};
use super::{RateError, RateValue};
use crate::engine::{ceil_nat, rat, rat_to_f64, tower_constants};
use crate::gfun::GFunction;
use crate::hilbert::ConditionModulus;
use crate::schedules::ModulusBundle;

/// Toy-scale replacements for the tower constants.
#[derive(Clone, Debug, Default)]
pub struct TowerOverrides {
    pub n_eps_tilde: Option<BigUint>,
    pub i0: Option<u64>,
    /// Replaces the whole tower value.
    pub k: Option<BigUint>,
    /// Replaces the majorant `f` of the bound.
    pub f: Option<MajorantFn>,
}

impl TowerOverrides {
    pub fn is_empty(&self) -> bool {
        self.n_eps_tilde.is_none() && self.i0.is_none() && self.k.is_none() && self.f.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct RateOptions {
    pub path: EvalPath,
    pub budget: RateBudget,
    pub overrides: TowerOverrides,
}

impl Default for RateOptions {
    fn default() -> Self {
        RateOptions { path: EvalPath::Structural, budget: RateBudget::default(), overrides: TowerOverrides::default() }
    }
}

impl RateOptions {
    pub fn with_path(mut self, path: EvalPath) -> Self {
        self.path = path;
        self
    }

    pub fn with_overrides(mut self, o: TowerOverrides) -> Self {
        self.overrides = o;
        self
    }

    pub fn with_applications(mut self, n: u64) -> Self {
        self.budget.applications = n;
        self
    }

    fn evaluator(&self) -> Evaluator {
        Evaluator::new(self.path, self.budget)
    }
}

/// `k_{i₀}` together with the constants it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct TowerValue {
    pub k: RateValue,
    pub eps_tilde: BigRational,
    pub i0: u64,
    pub n_eps_tilde: BigUint,
    pub applications: u64,
}

fn check_common(eps: &BigRational, tau: &BigRational, d: u64) -> Result<(), RateError> {
    if d == 0 {
        return Err(RateError::InvalidArgument("d must be at least 1".into()));
    }
    if !(*eps > BigRational::zero() && *eps <= BigRational::one()) {
        return Err(RateError::InvalidArgument(format!("eps = {} outside (0, 1]", rat_to_f64(eps))));
    }
    if !(*tau >= BigRational::zero() && *tau < BigRational::one()) {
        return Err(RateError::InvalidArgument(format!("tau = {} outside [0, 1)", rat_to_f64(tau))));
    }
    Ok(())
}

fn clip_unit(x: BigRational) -> BigRational {
    x.min(BigRational::one())
}

fn to_u64(x: &BigUint, what: &str) -> Result<u64, RateError> {
    x.to_u64().ok_or_else(|| RateError::BudgetExceeded {
        expr: what.into(),
        reason: format!("{}-bit value exceeds 64-bit indices", x.bits()),
    })
}

fn int(n: u64) -> BigRational {
    BigRational::from_integer(n.into())
}

fn k_tower_exact(
    f: &MajorantFn,
    d: u64,
    eps: &BigRational,
    tau: &BigRational,
    ov: &TowerOverrides,
    ev: &Evaluator,
) -> Result<TowerValue, RateError> {
    check_common(eps, tau, d)?;
    let (eps_tilde, i0_c, n_c) = tower_constants(eps, tau, d);
    let n = ov.n_eps_tilde.clone().unwrap_or(n_c);
    let i0 = ov.i0.unwrap_or(i0_c);
    if n.is_zero() {
        return Err(RateError::InvalidArgument("n_eps_tilde must be at least 1".into()));
    }
    let expr = format!("k_{i0} with f = {f}, d = {d}, n_eps_tilde = {n}");
    let res = (|| {
        let ft = f.clone().tilde(d);
        let mut k = BigUint::one();
        // k_0 uses f̃_0; k_{i+1} uses f̃_i.
        for i in 0..=i0 {
            let level = i.saturating_sub(1);
            let count = if n.is_one() {
                BigUint::one()
            } else {
                if n.bits().saturating_mul(level) > ev.budget().bit_cap {
                    return Err(RateError::BudgetExceeded {
                        expr: format!("n_eps_tilde^{level}"),
                        reason: "iteration count exceeds the bit cap".into(),
                    });
                }
                num_traits::pow::pow(n.clone(), level as usize)
            };
            let step = ft.clone().iterate(count).tilde(d).iterate(n.clone());
            k = ev.eval(&step, &k)?;
        }
        Ok(k)
    })();
    let k = match res {
        Err(RateError::BudgetExceeded { expr: inner, reason }) => {
            RateValue::BudgetExceeded { expr: format!("{expr} (stalled at {inner})"), reason }
        }
        other => RateValue::from_result(other)?,
    };
    Ok(TowerValue { k, eps_tilde, i0, n_eps_tilde: n, applications: ev.used() })
}

/// `K = k_{i₀}(f̃)` at accuracy `eps` and contraction factor `tau`.
pub fn k_tower(f: &MajorantFn, d: u64, eps: f64, tau: f64, opts: &RateOptions) -> Result<TowerValue, RateError> {
    let ev = opts.evaluator();
    k_tower_exact(f, d, &rat(eps, "eps")?, &rat(tau, "tau")?, &opts.overrides, &ev)
}

/// `max{g̃(i) : i ≤ m}`, literal unless `g` is nondecreasing.
fn g_tilde_m(g: &GFunction, m: u64, ev: &Evaluator) -> Result<u64, RateError> {
    if g.is_monotone() {
        return Ok(g.tilde(m));
    }
    let mut best = g.tilde(m);
    for i in 0..m {
        ev.charge(&format_args!("g~^M({m})"))?;
        best = best.max(g.tilde(i));
    }
    Ok(best)
}

fn h_m(moduli: &ModulusBundle, m: u64, ev: &Evaluator) -> Result<u64, RateError> {
    if moduli.monotone {
        return Ok(moduli.h(m)?);
    }
    let mut best = moduli.h(m)?;
    for i in 1..m {
        ev.charge(&format_args!("h^M({m})"))?;
        best = best.max(moduli.h(i)?);
    }
    Ok(best)
}

fn quantities_of(t: &TowerValue, q: &mut BTreeMap<String, String>) {
    q.insert("eps_tilde".into(), t.eps_tilde.to_string());
    q.insert("eps_tilde_approx".into(), format!("{:e}", rat_to_f64(&t.eps_tilde)));
    q.insert("i0".into(), t.i0.to_string());
    q.insert("n_eps_tilde".into(), t.n_eps_tilde.to_string());
    q.insert("k".into(), t.k.to_string());
}

#[derive(Clone, Debug, PartialEq)]
pub struct SingleResult {
    pub bound: RateValue,
    pub tower: TowerValue,
    /// `(ε/2)⁴/(8(1−τ)²d²)`, capped at 1.
    pub eps_d: BigRational,
}

impl SingleResult {
    pub fn quantities(&self) -> BTreeMap<String, String> {
        let mut q = BTreeMap::new();
        quantities_of(&self.tower, &mut q);
        q.insert("eps_d".into(), self.eps_d.to_string());
        q
    }
}

/// `Ξ(ε, g, χ, h, d) = χ(d·k_{i₀}(f̃))`.
pub fn xi_single(
    eps: f64,
    g: &GFunction,
    moduli: &ModulusBundle,
    d: u64,
    tau: f64,
    opts: &RateOptions,
) -> Result<SingleResult, RateError> {
    let e = rat(eps, "eps")?;
    let t = rat(tau, "tau")?;
    check_common(&e, &t, d)?;
    let two = int(2);
    let half = &e / &two;
    let half2 = &half * &half;
    let one_minus = BigRational::one() - &t;
    let eps_d = clip_unit(&half2 * &half2 / (int(8) * &one_minus * &one_minus * int(d * d)));

    let f = match &opts.overrides.f {
        Some(f) => f.clone(),
        None => {
            let coef = int(6 * d) * &one_minus / &half2;
            let (moduli, g) = (moduli.clone(), g.clone());
            let mono = moduli.monotone;
            MajorantFn::custom(format!("f[g = {g}]"), mono, move |n, ev| {
                let n = to_u64(n, "f argument")?;
                let dn = n.checked_mul(d).ok_or_else(|| RateError::BudgetExceeded {
                    expr: format!("chi({d}*{n})"),
                    reason: "argument exceeds 64-bit indices".into(),
                })?;
                let c = moduli.chi(dn)?;
                let gm = g_tilde_m(&g, c, ev)?;
                let hm = h_m(&moduli, gm, ev)?;
                let v = ceil_nat(&(&coef * int(hm)));
                Ok(v.max(BigUint::one()))
            })
        }
    };
    let ev = opts.evaluator();
    let tower = match &opts.overrides.k {
        Some(k) => TowerValue {
            k: RateValue::finite(k.clone()),
            eps_tilde: tower_constants(&eps_d, &t, d).0,
            i0: opts.overrides.i0.unwrap_or(0),
            n_eps_tilde: opts.overrides.n_eps_tilde.clone().unwrap_or_else(BigUint::one),
            applications: 0,
        },
        None => k_tower_exact(&f, d, &eps_d, &t, &opts.overrides, &ev)?,
    };
    let bound = match tower.k.value() {
        Some(k) => {
            let r = (|| {
                let dk = to_u64(&(k * d), "d*K")?;
                Ok(BigUint::from(moduli.chi(dk)?))
            })();
            RateValue::from_result(r)?
        }
        None => symbolic(&tower.k, &format!("chi({d}*K)"), "K"),
    };
    Ok(SingleResult { bound, tower, eps_d })
}

fn symbolic(inner: &RateValue, outer: &str, name: &str) -> RateValue {
    match inner {
        RateValue::BudgetExceeded { expr, reason } => RateValue::BudgetExceeded {
            expr: format!("{outer} where {name} = {expr}"),
            reason: reason.clone(),
        },
        other => other.clone(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FullMode {
    /// Metastability of `(u_n)` with the shift `c`.
    Main2,
    /// Metastability plus the approximate variational inequality at `δ`.
    MainQuant,
}

impl fmt::Display for FullMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FullMode::Main2 => "main2",
            FullMode::MainQuant => "mainquant",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FullResult {
    pub mode: FullMode,
    pub bound: RateValue,
    pub c: u64,
    /// `ε/(2d(2+τ))` in the quantitative-VIP mode.
    pub delta: Option<f64>,
    /// `K′`; points with residual below `1/K′` are the admissible test points.
    pub eps_prime: Option<RateValue>,
    pub inner: SingleResult,
}

impl FullResult {
    pub fn quantities(&self) -> BTreeMap<String, String> {
        let mut q = self.inner.quantities();
        q.insert("c".into(), self.c.to_string());
        if let Some(d) = self.delta {
            q.insert("delta".into(), d.to_string());
        }
        q
    }
}

/// `c = φ₁((φ₂((1−τ)e/6d) + ⌈ln(6d/e)⌉)/(1−τ))`.
fn shift_constant(moduli: &ModulusBundle, e: f64, d: u64, tau: f64) -> Result<u64, RateError> {
    let df = d as f64;
    let p2 = moduli.phi2((1.0 - tau) * e / (6.0 * df))?;
    let ln = (6.0 * df / e).ln().ceil().max(0.0);
    let arg = (p2 as f64 + ln) / (1.0 - tau);
    Ok(moduli.phi1(arg)?)
}

/// Rate for the HSDM iterates themselves: `Ξ(e/6, g_c, χ, h, d) + c` with
/// `e = ε` or `e = δ` by mode.
pub fn xi_full(
    eps: f64,
    g: &GFunction,
    moduli: &ModulusBundle,
    d: u64,
    tau: f64,
    mode: FullMode,
    opts: &RateOptions,
) -> Result<FullResult, RateError> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(RateError::InvalidArgument(format!("eps = {eps} outside (0, 1]")));
    }
    let (e, delta) = match mode {
        FullMode::Main2 => (eps, None),
        FullMode::MainQuant => {
            let dl = eps / (2.0 * d as f64 * (2.0 + tau));
            (dl, Some(dl))
        }
    };
    let c = shift_constant(moduli, e, d, tau)?;
    let gc = g.shifted(c);
    let inner = xi_single(e / 6.0, &gc, moduli, d, tau, opts)?;
    let bound = match inner.bound.value() {
        Some(v) => RateValue::finite(v + c),
        None => symbolic(&inner.bound, &format!("Xi + {c}"), "Xi"),
    };
    let eps_prime = (mode == FullMode::MainQuant).then(|| inner.tower.k.clone());
    Ok(FullResult { mode, bound, c, delta, eps_prime, inner })
}

fn ceil_u64(x: f64, what: &str) -> Result<u64, RateError> {
    let c = x.ceil();
    if !(c.is_finite() && c < 9.0e18) {
        return Err(RateError::BudgetExceeded { expr: what.into(), reason: format!("{x:e} exceeds 64-bit indices") });
    }
    Ok((c as u64).max(1))
}

/// `χ̂(ε) = max{φ₃(ε/2d, φ₄(ε/4d)), χ(⌈Nd/2ε⌉)}`.
fn chi_hat(e: f64, moduli: &ModulusBundle, d: u64, n: usize) -> Result<u64, RateError> {
    if !(e > 0.0 && e.is_finite()) {
        return Err(RateError::BudgetExceeded {
            expr: "chi_hat".into(),
            reason: format!("argument {e:e} not representable"),
        });
    }
    let df = d as f64;
    let p4 = moduli.phi4(e / (4.0 * df))?;
    let a = moduli.phi3(e / (2.0 * df), p4)?;
    let m = ceil_u64(n as f64 * df / (2.0 * e), "N*d/(2*eps)")?;
    Ok(a.max(moduli.chi(m)?))
}

/// `χ̂(ε)`, or `χ̂(ρ(d, ε/N))` when `rho` is given.
pub fn asy_rate(
    eps: f64,
    moduli: &ModulusBundle,
    d: u64,
    n_family: usize,
    rho: Option<&ConditionModulus>,
) -> Result<u64, RateError> {
    if d == 0 || n_family == 0 {
        return Err(RateError::InvalidArgument("d and N must be at least 1".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(RateError::InvalidArgument(format!("eps = {eps} must be positive")));
    }
    let e = match rho {
        Some(r) => r.eval(d, eps / n_family as f64)?,
        None => eps,
    };
    chi_hat(e, moduli, d, n_family)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OmegaReading {
    /// `ε²/(18d(g̃(φ₃(ε²/3d, n₀)) − n₀))`.
    #[default]
    Proof,
    /// `ε²/(18d·g̃(φ₃(ε²/3d, n₀) − n₀))`.
    Printed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OmegaValue {
    pub value: BigRational,
    /// The denominator vanished and was replaced by 1.
    pub guarded: bool,
}

/// `Ω_d(ε, g, n₀)`.
pub fn omega_d(
    eps: &BigRational,
    g: &dyn Fn(u64) -> Result<u64, RateError>,
    n0: u64,
    moduli: &ModulusBundle,
    d: u64,
    reading: OmegaReading,
) -> Result<OmegaValue, RateError> {
    if d == 0 {
        return Err(RateError::InvalidArgument("d must be at least 1".into()));
    }
    let e2 = eps * eps;
    let arg = rat_to_f64(&(&e2 / int(3 * d)));
    let m = moduli.phi3(arg, n0)?;
    let gt = |x: u64| -> Result<u64, RateError> { Ok(x.max(g(x)?)) };
    let den = match reading {
        OmegaReading::Proof => gt(m)?.saturating_sub(n0),
        OmegaReading::Printed => gt(m.saturating_sub(n0))?,
    };
    let guarded = den == 0;
    let value = e2 / (int(18 * d) * int(den.max(1)));
    Ok(OmegaValue { value, guarded })
}

/// `Ω_d^M(ε, g, n) = max{Ω_d(ε, g, i) : i ≤ n}`.
pub fn omega_m(
    eps: &BigRational,
    g: &dyn Fn(u64) -> Result<u64, RateError>,
    n: u64,
    moduli: &ModulusBundle,
    d: u64,
    reading: OmegaReading,
    ev: &Evaluator,
) -> Result<OmegaValue, RateError> {
    let mut best = omega_d(eps, g, 0, moduli, d, reading)?;
    for i in 1..=n {
        ev.charge(&format_args!("Omega^M(n = {n})"))?;
        let v = omega_d(eps, g, i, moduli, d, reading)?;
        if v.value > best.value {
            best = v;
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilyResult {
    pub bound: RateValue,
    pub tower: TowerValue,
    pub n0: u64,
    /// `((1−τ)ε²/96)²/(2d²)`.
    pub eps_d: BigRational,
    /// `χ̂(ρ(d, 1/(KN)))` when `K` is finite.
    pub chi_hat: Option<u64>,
}

impl FamilyResult {
    pub fn quantities(&self) -> BTreeMap<String, String> {
        let mut q = BTreeMap::new();
        quantities_of(&self.tower, &mut q);
        q.insert("n0".into(), self.n0.to_string());
        q.insert("eps_d".into(), self.eps_d.to_string());
        if let Some(c) = self.chi_hat {
            q.insert("chi_hat".into(), c.to_string());
        }
        q
    }
}

fn inv_ceil(x: f64, what: &str) -> Result<BigUint, RateError> {
    let r = BigRational::from_float(1.0 / x).ok_or_else(|| RateError::BudgetExceeded {
        expr: what.into(),
        reason: format!("1/{x:e} not representable"),
    })?;
    Ok(ceil_nat(&r).max(BigUint::one()))
}

fn biguint_to_f64(k: &BigUint) -> f64 {
    k.to_f64().unwrap_or(f64::INFINITY)
}

/// Rate for the cyclic family: `φ₃′(ε²/12d², max{n₀, χ̂(ρ(d, 1/(KN)))})`.
#[allow(clippy::too_many_arguments)]
pub fn xi_family(
    eps: f64,
    g: &GFunction,
    moduli: &ModulusBundle,
    rho: &ConditionModulus,
    d: u64,
    tau: f64,
    n_family: usize,
    reading: OmegaReading,
    opts: &RateOptions,
) -> Result<FamilyResult, RateError> {
    let e = rat(eps, "eps")?;
    let t = rat(tau, "tau")?;
    check_common(&e, &t, d)?;
    if n_family == 0 {
        return Err(RateError::InvalidArgument("N must be at least 1".into()));
    }
    let one_minus = BigRational::one() - &t;
    let e2 = &e * &e;
    let a = ceil_nat(&(int(96 * d) / (&one_minus * &e2)));
    let b = ceil_nat(&(int(48 * d * d) / (&one_minus * &e2)));
    let n0 = moduli.chi(to_u64(&a, "96d/((1-tau)eps^2)")?)?.max(moduli.chi(to_u64(&b, "48d^2/((1-tau)eps^2)")?)?);
    let base = &one_minus * &e2 / int(96);
    let eps_d = clip_unit(&base * &base / int(2 * d * d));
    let nf = n_family as f64;

    let f = match &opts.overrides.f {
        Some(f) => f.clone(),
        None => {
            let label = format!("f_family[g = {g}]");
            let (moduli, g, rho) = (moduli.clone(), g.clone(), rho.clone());
            let half = &e / int(2);
            let inner = Rc::new(move |k: &BigUint, ev: &Evaluator| -> Result<BigUint, RateError> {
                let kf = biguint_to_f64(k);
                let r = rho.eval(d, 1.0 / (nf * kf))?;
                let m = n0.max(chi_hat(r, &moduli, d, n_family)?);
                let gm = |x: u64| g_tilde_m(&g, x, ev);
                let om = omega_m(&half, &gm, m, &moduli, d, reading, ev)?;
                let r2 = rho.eval(d, rat_to_f64(&om.value))?;
                inv_ceil(r2, "1/rho(d, Omega^M)")
            });
            MajorantFn::custom(label, false, move |k, ev| inner(k, ev)).monotonize()
        }
    };
    let ev = opts.evaluator();
    let tower = match &opts.overrides.k {
        Some(k) => TowerValue {
            k: RateValue::finite(k.clone()),
            eps_tilde: tower_constants(&eps_d, &t, d).0,
            i0: opts.overrides.i0.unwrap_or(0),
            n_eps_tilde: opts.overrides.n_eps_tilde.clone().unwrap_or_else(BigUint::one),
            applications: 0,
        },
        None => k_tower_exact(&f, d, &eps_d, &t, &opts.overrides, &ev)?,
    };
    let (bound, ch) = match tower.k.value() {
        Some(k) => {
            let r = (|| {
                let x = rho.eval(d, 1.0 / (biguint_to_f64(k) * nf))?;
                let ch = chi_hat(x, moduli, d, n_family)?;
                let arg = rat_to_f64(&(&e2 / int(12 * d * d)));
                Ok((moduli.phi3_prime(arg, n0.max(ch))?, ch))
            })();
            match r {
                Ok((v, ch)) => (RateValue::finite(v), Some(ch)),
                Err(err) => (RateValue::from_result(Err(err))?, None),
            }
        }
        None => (symbolic(&tower.k, "phi3'(eps^2/12d^2, max{n0, chi_hat(rho(d, 1/(K N)))})", "K"), None),
    };
    Ok(FamilyResult { bound, tower, n0, eps_d, chi_hat: ch })
}
