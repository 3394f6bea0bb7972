use std::cell::{Cell, RefCell};
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use super::RateError;

pub type CustomFn = Rc<dyn Fn(&BigUint, &Evaluator) -> Result<BigUint, RateError>>;

/// Integer functions on the positive naturals.
#[derive(Clone)]
pub enum MajorantFn {
    Identity,
    Constant(BigUint),
    /// `coef · n^exp`.
    Monomial { coef: BigUint, exp: u32 },
    /// `table[n−1]`, the last entry extending to the right; `n = 0` reads the first.
    Table(Rc<Vec<BigUint>>),
    Custom { f: CustomFn, monotone: bool, label: String },
    /// `max{inner^M(16dn²), 16dn²}`.
    Tilde { inner: Rc<MajorantFn>, d: u64 },
    /// `inner` applied `count` times.
    Iterate { inner: Rc<MajorantFn>, count: BigUint },
    Max(Rc<MajorantFn>, Rc<MajorantFn>),
    /// `f^M(n) = max{f(i) : 1 ≤ i ≤ n}`.
    Monotonize(Rc<MajorantFn>),
}

impl fmt::Debug for MajorantFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for MajorantFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MajorantFn::Identity => write!(f, "id"),
            MajorantFn::Constant(c) => write!(f, "{c}"),
            MajorantFn::Monomial { coef, exp } => write!(f, "{coef}*n^{exp}"),
            MajorantFn::Table(t) => {
                let s: Vec<String> = t.iter().map(|x| x.to_string()).collect();
                write!(f, "table:{}", s.join(","))
            }
            MajorantFn::Custom { label, .. } => write!(f, "{label}"),
            MajorantFn::Tilde { inner, d } => write!(f, "tilde_{d}({inner})"),
            MajorantFn::Iterate { inner, count } => write!(f, "({inner})^({count})"),
            MajorantFn::Max(a, b) => write!(f, "max({a}, {b})"),
            MajorantFn::Monotonize(a) => write!(f, "({a})^M"),
        }
    }
}

impl MajorantFn {
    pub fn constant(c: u64) -> Self {
        MajorantFn::Constant(BigUint::from(c.max(1)))
    }

    pub fn monomial(coef: u64, exp: u32) -> Self {
        MajorantFn::Monomial { coef: BigUint::from(coef.max(1)), exp }
    }

    pub fn table(values: &[u64]) -> Self {
        MajorantFn::Table(Rc::new(values.iter().map(|&v| BigUint::from(v)).collect()))
    }

    pub fn custom(
        label: impl Into<String>,
        monotone: bool,
        f: impl Fn(&BigUint, &Evaluator) -> Result<BigUint, RateError> + 'static,
    ) -> Self {
        MajorantFn::Custom { f: Rc::new(f), monotone, label: label.into() }
    }

    pub fn tilde(self, d: u64) -> Self {
        MajorantFn::Tilde { inner: Rc::new(self), d }
    }

    pub fn iterate(self, count: BigUint) -> Self {
        MajorantFn::Iterate { inner: Rc::new(self), count }
    }

    pub fn max(self, other: MajorantFn) -> Self {
        MajorantFn::Max(Rc::new(self), Rc::new(other))
    }

    pub fn monotonize(self) -> Self {
        if self.is_monotone() {
            self
        } else {
            MajorantFn::Monotonize(Rc::new(self))
        }
    }

    /// Known to be nondecreasing from its structure.
    pub fn is_monotone(&self) -> bool {
        match self {
            MajorantFn::Identity
            | MajorantFn::Constant(_)
            | MajorantFn::Monomial { .. }
            | MajorantFn::Tilde { .. }
            | MajorantFn::Monotonize(_) => true,
            MajorantFn::Table(t) => t.windows(2).all(|w| w[0] <= w[1]),
            MajorantFn::Custom { monotone, .. } => *monotone,
            MajorantFn::Iterate { inner, .. } => inner.is_monotone(),
            MajorantFn::Max(a, b) => a.is_monotone() && b.is_monotone(),
        }
    }
}

/// `(f^M, f̃)` for `f`.
pub fn build_majorant_chain(f: &MajorantFn, d: u64) -> (MajorantFn, MajorantFn) {
    (f.clone().monotonize(), f.clone().tilde(d))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalPath {
    /// Apply every node literally.
    Literal,
    /// Collapse iterated monomials to closed forms first.
    Structural,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RateBudget {
    pub applications: u64,
    pub bit_cap: u64,
}

impl Default for RateBudget {
    fn default() -> Self {
        RateBudget { applications: 1_000_000, bit_cap: 1 << 20 }
    }
}

/// `c · n^p` with possibly huge `p`.
#[derive(Clone, Debug, PartialEq)]
enum Closed {
    Const(BigUint),
    Mono { c: BigUint, p: BigUint },
}

/// Evaluation state: budget counters and the literal-path memo.
pub struct Evaluator {
    budget: RateBudget,
    path: EvalPath,
    used: Cell<u64>,
    depth: Cell<u32>,
    memo: RefCell<HashMap<(usize, BigUint), BigUint>>,
}

impl fmt::Debug for Evaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Evaluator")
            .field("budget", &self.budget)
            .field("path", &self.path)
            .field("used", &self.used.get())
            .finish()
    }
}

fn node_key(f: &MajorantFn) -> usize {
    f as *const MajorantFn as usize
}

impl Evaluator {
    pub fn new(path: EvalPath, budget: RateBudget) -> Self {
        Evaluator { budget, path, used: Cell::new(0), depth: Cell::new(0), memo: RefCell::new(HashMap::new()) }
    }

    pub fn path(&self) -> EvalPath {
        self.path
    }

    pub fn budget(&self) -> RateBudget {
        self.budget
    }

    pub fn used(&self) -> u64 {
        self.used.get()
    }

    pub fn charge(&self, what: &dyn fmt::Display) -> Result<(), RateError> {
        let u = self.used.get();
        if u >= self.budget.applications {
            return Err(RateError::BudgetExceeded {
                expr: what.to_string(),
                reason: format!("more than {} applications", self.budget.applications),
            });
        }
        self.used.set(u + 1);
        Ok(())
    }

    pub fn check_size(&self, x: BigUint, what: &dyn fmt::Display) -> Result<BigUint, RateError> {
        if x.bits() > self.budget.bit_cap {
            return Err(RateError::BudgetExceeded {
                expr: what.to_string(),
                reason: format!("value exceeds 2^{} bits", self.budget.bit_cap),
            });
        }
        Ok(x)
    }

    fn too_big(&self, what: &dyn fmt::Display) -> RateError {
        RateError::BudgetExceeded {
            expr: what.to_string(),
            reason: format!("value exceeds 2^{} bits", self.budget.bit_cap),
        }
    }

    /// The memo lives for one top-level call, so node addresses stay valid.
    pub fn eval(&self, f: &MajorantFn, n: &BigUint) -> Result<BigUint, RateError> {
        self.depth.set(self.depth.get() + 1);
        let out = self.eval_inner(f, n);
        self.depth.set(self.depth.get() - 1);
        if self.depth.get() == 0 {
            self.memo.borrow_mut().clear();
        }
        out
    }

    fn eval_inner(&self, f: &MajorantFn, n: &BigUint) -> Result<BigUint, RateError> {
        if self.path == EvalPath::Structural {
            if let Some(c) = closed_form(f) {
                return self.eval_closed(&c, n, f);
            }
        }
        self.eval_literal(f, n)
    }

    pub fn eval_u64(&self, f: &MajorantFn, n: u64) -> Result<BigUint, RateError> {
        self.eval(f, &BigUint::from(n))
    }

    fn eval_closed(&self, c: &Closed, n: &BigUint, f: &MajorantFn) -> Result<BigUint, RateError> {
        self.charge(f)?;
        match c {
            Closed::Const(v) => Ok(v.clone()),
            Closed::Mono { c, p } => {
                if n.is_zero() {
                    return Ok(BigUint::zero());
                }
                let cap = self.budget.bit_cap;
                let pexp = if n.is_one() {
                    0
                } else {
                    let nb = n.bits().saturating_sub(1);
                    let p64 = p.to_u64().ok_or_else(|| self.too_big(f))?;
                    if nb.saturating_mul(p64) > cap {
                        return Err(self.too_big(f));
                    }
                    p64
                };
                if c.bits() > cap {
                    return Err(self.too_big(f));
                }
                let pow = num_traits::pow::pow(n.clone(), pexp as usize);
                self.check_size(c * pow, f)
            }
        }
    }

    fn eval_literal(&self, f: &MajorantFn, n: &BigUint) -> Result<BigUint, RateError> {
        let key = (node_key(f), n.clone());
        if let Some(v) = self.memo.borrow().get(&key) {
            return Ok(v.clone());
        }
        self.charge(f)?;
        let v = match f {
            MajorantFn::Identity => n.clone(),
            MajorantFn::Constant(c) => c.clone(),
            MajorantFn::Monomial { coef, exp } => {
                if n.bits().saturating_mul(*exp as u64) > self.budget.bit_cap + 1 {
                    return Err(self.too_big(f));
                }
                self.check_size(coef * num_traits::pow::pow(n.clone(), *exp as usize), f)?
            }
            MajorantFn::Table(t) => {
                let i = n.to_usize().unwrap_or(usize::MAX).max(1) - 1;
                t.get(i).or(t.last()).cloned().unwrap_or_else(BigUint::one)
            }
            MajorantFn::Custom { f: g, .. } => self.check_size(g(n, self)?, f)?,
            MajorantFn::Tilde { inner, d } => {
                let m = self.check_size(BigUint::from(16 * d) * n * n, f)?;
                let fm = self.eval_monotone(inner, &m)?;
                fm.max(m)
            }
            MajorantFn::Iterate { inner, count } => {
                let mut x = n.clone();
                let mut i = BigUint::zero();
                while &i < count {
                    let y = self.eval(inner, &x)?;
                    if y == x {
                        break;
                    }
                    x = y;
                    i += 1u32;
                }
                x
            }
            MajorantFn::Max(a, b) => self.eval(a, n)?.max(self.eval(b, n)?),
            MajorantFn::Monotonize(a) => self.eval_monotone(a, n)?,
        };
        self.memo.borrow_mut().insert(key, v.clone());
        Ok(v)
    }

    /// `f^M(n)`, literal maximum unless `f` is structurally monotone.
    fn eval_monotone(&self, f: &MajorantFn, n: &BigUint) -> Result<BigUint, RateError> {
        if f.is_monotone() {
            return self.eval(f, n);
        }
        let top = n.to_u64().ok_or_else(|| RateError::BudgetExceeded {
            expr: format!("({f})^M({n})"),
            reason: "monotonization range exceeds u64".into(),
        })?;
        let mut best = BigUint::zero();
        for i in 1..=top.max(1) {
            best = best.max(self.eval_u64(f, i)?);
        }
        Ok(best)
    }
}

fn closed_form(f: &MajorantFn) -> Option<Closed> {
    match f {
        MajorantFn::Identity => Some(Closed::Mono { c: BigUint::one(), p: BigUint::one() }),
        MajorantFn::Constant(c) => Some(Closed::Const(c.clone())),
        MajorantFn::Monomial { coef, exp } => Some(Closed::Mono { c: coef.clone(), p: BigUint::from(*exp) }),
        MajorantFn::Tilde { inner, d } => {
            let sd = BigUint::from(16 * d);
            match closed_form(inner)? {
                Closed::Mono { c, p } if !p.is_zero() && !c.is_zero() => {
                    let p32 = p.to_u32()?;
                    Some(Closed::Mono { c: c * num_traits::pow::pow(sd, p32 as usize), p: p * 2u32 })
                }
                Closed::Const(c) if c <= sd => Some(Closed::Mono { c: sd, p: BigUint::from(2u32) }),
                _ => None,
            }
        }
        MajorantFn::Iterate { inner, count } => {
            if count.is_zero() {
                return Some(Closed::Mono { c: BigUint::one(), p: BigUint::one() });
            }
            match closed_form(inner)? {
                Closed::Const(c) => Some(Closed::Const(c)),
                Closed::Mono { c, p } => iterate_mono(&c, &p, count),
            }
        }
        _ => None,
    }
}

/// `(c·n^p)^{(k)} = c^{(p^k−1)/(p−1)} · n^{p^k}`, when the sizes are representable.
fn iterate_mono(c: &BigUint, p: &BigUint, k: &BigUint) -> Option<Closed> {
    let cap_bits: u64 = 1 << 22;
    if p.is_one() {
        if c.is_one() {
            return Some(Closed::Mono { c: BigUint::one(), p: BigUint::one() });
        }
        let k64 = k.to_u64()?;
        if (c.bits()).saturating_mul(k64) > cap_bits {
            return None;
        }
        return Some(Closed::Mono { c: num_traits::pow::pow(c.clone(), k64 as usize), p: BigUint::one() });
    }
    let k64 = k.to_u64()?;
    let p64 = p.to_u64()?;
    if (64 - p64.leading_zeros() as u64).saturating_mul(k64) > 62 {
        return None;
    }
    let pk = p64.checked_pow(k64 as u32)?;
    let e = (pk - 1) / (p64 - 1);
    if !c.is_one() && c.bits().saturating_mul(e) > cap_bits {
        return None;
    }
    Some(Closed::Mono { c: num_traits::pow::pow(c.clone(), e as usize), p: BigUint::from(pk) })
}
