//! Step-size sequences `λ_n = c/(n+1)^ρ` and the quantitative moduli
//! consumed by the rate formulas, with an enumeration oracle to validate them.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const VERIFY_SLACK: f64 = 1e-12;
const MAX_INDEX: f64 = 4.0e18;
const MAX_ADJUST: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModulusError {
    #[error("no {kind} modulus exists: {reason}")]
    NoModulus { kind: &'static str, reason: String },
    #[error("{kind} modulus overflows 64-bit indices")]
    Overflow { kind: &'static str },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("exponent rho = {0} outside (0, 1]")]
    BadExponent(f64),
    #[error("scale c = {0} outside (0, 1]")]
    BadScale(f64),
    #[error("period must be at least 1")]
    BadPeriod,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleKind {
    /// `λ_n = 1/(n+1)^ρ`.
    Power { rho: f64 },
    /// `λ_n = c/(n+1)^ρ`.
    ScaledPower { c: f64, rho: f64 },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
struct ScheduleRepr {
    #[serde(flatten)]
    kind: ScheduleKind,
    #[serde(default = "one")]
    period: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleRepr", into = "ScheduleRepr")]
pub struct Schedule {
    kind: ScheduleKind,
    period: usize,
}

impl TryFrom<ScheduleRepr> for Schedule {
    type Error = ScheduleError;
    fn try_from(r: ScheduleRepr) -> Result<Self, Self::Error> {
        Schedule::new(r.kind, r.period)
    }
}

impl From<Schedule> for ScheduleRepr {
    fn from(s: Schedule) -> Self {
        ScheduleRepr { kind: s.kind, period: s.period }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ScheduleKind::Power { rho } => write!(f, "Power({rho})"),
            ScheduleKind::ScaledPower { c, rho } => write!(f, "{c}*Power({rho})"),
        }
    }
}

/// Arguments of a single modulus evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModulusQuery {
    H { n: u64 },
    Chi { k: u64 },
    Phi1 { k: f64 },
    Phi2 { eps: f64 },
    Phi3 { eps: f64, n: u64, tau: f64 },
    Phi4 { eps: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verification {
    VerifiedUpTo(u64),
    Counterexample(u64),
}

impl Verification {
    pub fn is_verified(&self) -> bool {
        matches!(self, Verification::VerifiedUpTo(_))
    }
}

impl Schedule {
    pub fn new(kind: ScheduleKind, period: usize) -> Result<Self, ScheduleError> {
        let (c, rho) = match kind {
            ScheduleKind::Power { rho } => (1.0, rho),
            ScheduleKind::ScaledPower { c, rho } => (c, rho),
        };
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(ScheduleError::BadExponent(rho));
        }
        if !(c > 0.0 && c <= 1.0) {
            return Err(ScheduleError::BadScale(c));
        }
        if period == 0 {
            return Err(ScheduleError::BadPeriod);
        }
        Ok(Schedule { kind, period })
    }

    pub fn power(rho: f64) -> Result<Self, ScheduleError> {
        Self::new(ScheduleKind::Power { rho }, 1)
    }

    pub fn scaled_power(c: f64, rho: f64) -> Result<Self, ScheduleError> {
        Self::new(ScheduleKind::ScaledPower { c, rho }, 1)
    }

    pub fn with_period(self, period: usize) -> Result<Self, ScheduleError> {
        Self::new(self.kind, period)
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn scale(&self) -> f64 {
        match self.kind {
            ScheduleKind::Power { .. } => 1.0,
            ScheduleKind::ScaledPower { c, .. } => c,
        }
    }

    pub fn rho(&self) -> f64 {
        match self.kind {
            ScheduleKind::Power { rho } | ScheduleKind::ScaledPower { rho, .. } => rho,
        }
    }

    pub fn lambda(&self, n: u64) -> f64 {
        let x = (n as f64) + 1.0;
        let rho = self.rho();
        let p = if rho == 1.0 {
            x
        } else if rho == 0.5 {
            x.sqrt()
        } else {
            x.powf(rho)
        };
        self.scale() / p
    }

    /// Least `h` with `λ_n ≥ 1/h`.
    pub fn h(&self, n: u64) -> Result<u64, ModulusError> {
        let lam = self.lambda(n);
        let est = (1.0 / lam).ceil();
        if !(est < MAX_INDEX) {
            return Err(ModulusError::Overflow { kind: "h" });
        }
        let mut h = (est as u64).max(1);
        while lam < 1.0 / h as f64 {
            h += 1;
        }
        while h > 1 && lam >= 1.0 / (h - 1) as f64 {
            h -= 1;
        }
        Ok(h)
    }

    /// Least `i` with `λ_j ≤ 1/(k+1)` for all `j ≥ i`.
    pub fn chi(&self, k: u64) -> Result<u64, ModulusError> {
        let thr = 1.0 / ((k as f64) + 1.0);
        let est = (self.scale() * ((k as f64) + 1.0)).powf(1.0 / self.rho()) - 1.0;
        least_index("chi", est, |i| self.lambda(i) <= thr)
    }

    /// An `m` with `Σ_{i=1}^{m} λ_i ≥ k`, from the integral lower bound.
    pub fn phi1(&self, k: f64) -> Result<u64, ModulusError> {
        if k.is_nan() {
            return Err(ModulusError::InvalidArgument("phi1 of NaN".into()));
        }
        if k <= 0.0 {
            return Ok(0);
        }
        let (c, rho) = (self.scale(), self.rho());
        let m = if rho == 1.0 {
            2.0 * (k / c).exp() - 2.0
        } else {
            let q = 1.0 - rho;
            (q * k / c + 2f64.powf(q)).powf(1.0 / q) - 2.0
        };
        let m = m.ceil().max(k.ceil());
        if !(m < MAX_INDEX) {
            return Err(ModulusError::Overflow { kind: "phi1" });
        }
        let mut m = m as u64;
        // guard against rounding in the closed form: the partial sum decides
        if m <= MAX_ADJUST {
            let mut sum: f64 = (1..=m).map(|i| self.lambda(i)).sum();
            while sum < k {
                m += 1;
                sum += self.lambda(m);
            }
        }
        Ok(m)
    }

    /// An `n` with `(λ_j − λ_{j+1})/λ_{j+1}² ≤ ε` for all `j ≥ n`; only for `ρ < 1`.
    pub fn phi2(&self, eps: f64) -> Result<u64, ModulusError> {
        check_eps(eps)?;
        let (c, rho) = (self.scale(), self.rho());
        if rho == 1.0 {
            return Err(ModulusError::NoModulus {
                kind: "phi2",
                reason: format!(
                    "{self}: (λ_n − λ_(n+1))/λ_(n+1)² tends to 1/c, so it is not eventually below every ε"
                ),
            });
        }
        let n = (rho * 4f64.powf(rho) / (c * eps)).powf(1.0 / (1.0 - rho)) - 1.0;
        let n = n.ceil().max(0.0);
        if !(n < MAX_INDEX) {
            return Err(ModulusError::Overflow { kind: "phi2" });
        }
        Ok(n as u64)
    }

    /// An `m ≥ n` with `∏_{i=n}^{m'} (1 − λ_i(1−τ)) ≤ ε` for all `m' ≥ m`.
    pub fn phi3(&self, eps: f64, n: u64, tau: f64) -> Result<u64, ModulusError> {
        check_eps(eps)?;
        if !(0.0..1.0).contains(&tau) {
            return Err(ModulusError::InvalidArgument(format!("tau = {tau} outside [0, 1)")));
        }
        let l = (1.0 / eps).ln();
        if l <= 0.0 {
            return Ok(n);
        }
        let (c, rho) = (self.scale(), self.rho());
        let a = l / (c * (1.0 - tau));
        let x = (n as f64) + 1.0;
        let m = if rho == 1.0 {
            x * a.exp() - 2.0
        } else {
            let q = 1.0 - rho;
            (x.powf(q) + q * a).powf(1.0 / q) - 2.0
        };
        let m = m.ceil();
        if !(m < MAX_INDEX) {
            return Err(ModulusError::Overflow { kind: "phi3" });
        }
        Ok((m.max(0.0) as u64).max(n))
    }

    /// `φ₃′(ε, n) = max{n, max_{j ≤ n} φ₃(ε, j)}`. The closed form of `φ₃`
    /// is nondecreasing in `n`, so the inner maximum is attained at `j = n`.
    pub fn phi3_prime(&self, eps: f64, n: u64, tau: f64) -> Result<u64, ModulusError> {
        Ok(self.phi3(eps, n, tau)?.max(n))
    }

    /// Least `m` with `N λ_m ≤ ε`; bounds the tail `Σ_{i ≥ m} |λ_{i+N} − λ_i|`.
    pub fn phi4(&self, eps: f64) -> Result<u64, ModulusError> {
        check_eps(eps)?;
        let nf = self.period as f64;
        let est = (self.scale() * nf / eps).powf(1.0 / self.rho()) - 1.0;
        least_index("phi4", est, |m| nf * self.lambda(m) <= eps)
    }

    pub fn modulus(&self, q: ModulusQuery) -> Result<u64, ModulusError> {
        match q {
            ModulusQuery::H { n } => self.h(n),
            ModulusQuery::Chi { k } => self.chi(k),
            ModulusQuery::Phi1 { k } => self.phi1(k),
            ModulusQuery::Phi2 { eps } => self.phi2(eps),
            ModulusQuery::Phi3 { eps, n, tau } => self.phi3(eps, n, tau),
            ModulusQuery::Phi4 { eps } => self.phi4(eps),
        }
    }

    /// Bundle of analytic moduli with the contraction factor fixed.
    pub fn moduli(&self, tau: f64) -> ModulusBundle {
        ModulusBundle::from_schedule(*self, tau)
    }
}

fn check_eps(eps: f64) -> Result<(), ModulusError> {
    if eps.is_finite() && eps > 0.0 {
        Ok(())
    } else {
        Err(ModulusError::InvalidArgument(format!("epsilon = {eps} must be positive")))
    }
}

/// Least index satisfying a monotone predicate, starting from a float estimate.
fn least_index(
    kind: &'static str,
    est: f64,
    pred: impl Fn(u64) -> bool,
) -> Result<u64, ModulusError> {
    if !(est < MAX_INDEX) {
        return Err(ModulusError::Overflow { kind });
    }
    let mut i = est.max(0.0).floor() as u64;
    let mut steps = 0;
    while !pred(i) {
        i += 1;
        steps += 1;
        if steps > MAX_ADJUST {
            return Err(ModulusError::Overflow { kind });
        }
    }
    while i > 0 && pred(i - 1) {
        i -= 1;
    }
    Ok(i)
}

/// Exhaustively checks the defining inequality of a modulus for indices up to
/// `cap`. `claimed` replaces the analytic value when given (ignored for `h`,
/// which is checked as a function).
pub fn verify_modulus(
    s: &Schedule,
    q: ModulusQuery,
    claimed: Option<u64>,
    cap: u64,
) -> Result<Verification, ModulusError> {
    let cap = cap.max(1);
    let value = match (q, claimed) {
        (ModulusQuery::H { .. }, _) => 0,
        (_, Some(v)) => v,
        (_, None) => s.modulus(q)?,
    };
    let up = 1.0 + VERIFY_SLACK;
    match q {
        ModulusQuery::H { .. } => {
            for n in 0..=cap {
                let h = s.h(n)?;
                if s.lambda(n) < (1.0 / h as f64) * (1.0 - VERIFY_SLACK) {
                    return Ok(Verification::Counterexample(n));
                }
            }
        }
        ModulusQuery::Chi { k } => {
            let thr = 1.0 / ((k as f64) + 1.0);
            for i in value..=cap {
                if s.lambda(i) > thr * up {
                    return Ok(Verification::Counterexample(i));
                }
            }
        }
        ModulusQuery::Phi1 { k } => {
            if value <= cap {
                let sum: f64 = (1..=value).map(|i| s.lambda(i)).sum();
                if sum < k * (1.0 - VERIFY_SLACK) {
                    return Ok(Verification::Counterexample(value));
                }
            }
        }
        ModulusQuery::Phi2 { eps } => {
            for n in value..=cap {
                let (a, b) = (s.lambda(n), s.lambda(n + 1));
                if (a - b).abs() / (b * b) > eps * up {
                    return Ok(Verification::Counterexample(n));
                }
            }
        }
        ModulusQuery::Phi3 { eps, n, tau } => {
            let mut prod = 1.0;
            for m in n..=cap.max(n) {
                prod *= 1.0 - s.lambda(m) * (1.0 - tau);
                if m >= value && prod > eps * up {
                    return Ok(Verification::Counterexample(m));
                }
            }
        }
        ModulusQuery::Phi4 { eps } => {
            let np = s.period() as u64;
            let tail: f64 = (value..=cap.max(value))
                .map(|i| (s.lambda(i + np) - s.lambda(i)).abs())
                .sum();
            if tail > eps * up {
                return Ok(Verification::Counterexample(value));
            }
        }
    }
    Ok(Verification::VerifiedUpTo(cap))
}

pub type IndexFn = Arc<dyn Fn(u64) -> Result<u64, ModulusError> + Send + Sync>;
pub type RealIndexFn = Arc<dyn Fn(f64) -> Result<u64, ModulusError> + Send + Sync>;
pub type ProductFn = Arc<dyn Fn(f64, u64) -> Result<u64, ModulusError> + Send + Sync>;

/// The moduli consumed by the rate formulas; the contraction factor is
/// already fixed inside `phi3`.
#[derive(Clone)]
pub struct ModulusBundle {
    pub h: IndexFn,
    pub chi: IndexFn,
    pub phi1: RealIndexFn,
    pub phi2: RealIndexFn,
    pub phi3: ProductFn,
    pub phi4: RealIndexFn,
    /// Whether `h` and `chi` are nondecreasing (true for the analytic forms).
    pub monotone: bool,
    /// Whether `phi3` is nondecreasing in its index argument.
    pub phi3_monotone: bool,
    pub period: usize,
    pub label: String,
}

impl fmt::Debug for ModulusBundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModulusBundle")
            .field("label", &self.label)
            .field("period", &self.period)
            .finish()
    }
}

impl ModulusBundle {
    pub fn from_schedule(s: Schedule, tau: f64) -> Self {
        ModulusBundle {
            h: Arc::new(move |n| s.h(n)),
            chi: Arc::new(move |k| s.chi(k)),
            phi1: Arc::new(move |k| s.phi1(k)),
            phi2: Arc::new(move |e| s.phi2(e)),
            phi3: Arc::new(move |e, n| s.phi3(e, n, tau)),
            phi4: Arc::new(move |e| s.phi4(e)),
            monotone: true,
            phi3_monotone: true,
            period: s.period(),
            label: s.to_string(),
        }
    }

    pub fn with_chi(mut self, chi: IndexFn) -> Self {
        self.chi = chi;
        self.label.push_str("+chi");
        self
    }

    pub fn with_h(mut self, h: IndexFn) -> Self {
        self.h = h;
        self.label.push_str("+h");
        self
    }

    pub fn with_phi3(mut self, phi3: ProductFn) -> Self {
        self.phi3 = phi3;
        self.phi3_monotone = false;
        self.label.push_str("+phi3");
        self
    }

    /// Marks `h` and `chi` as possibly decreasing, forcing literal
    /// monotonization wherever a formula requires it.
    pub fn non_monotone(mut self) -> Self {
        self.monotone = false;
        self
    }

    pub fn h(&self, n: u64) -> Result<u64, ModulusError> {
        (self.h)(n)
    }

    pub fn chi(&self, k: u64) -> Result<u64, ModulusError> {
        (self.chi)(k)
    }

    pub fn phi1(&self, k: f64) -> Result<u64, ModulusError> {
        (self.phi1)(k)
    }

    pub fn phi2(&self, eps: f64) -> Result<u64, ModulusError> {
        (self.phi2)(eps)
    }

    pub fn phi3(&self, eps: f64, n: u64) -> Result<u64, ModulusError> {
        (self.phi3)(eps, n)
    }

    /// `max{n, max_{j ≤ n} φ₃(ε, j)}`, evaluated literally.
    pub fn phi3_prime(&self, eps: f64, n: u64) -> Result<u64, ModulusError> {
        if self.phi3_monotone {
            return Ok(self.phi3(eps, n)?.max(n));
        }
        let mut best = n;
        for j in 0..=n {
            best = best.max(self.phi3(eps, j)?);
        }
        Ok(best)
    }

    pub fn phi4(&self, eps: f64) -> Result<u64, ModulusError> {
        (self.phi4)(eps)
    }
}
