//! Counterfunction builders: fixed, randomized, and the anticipating
//! strategies that re-enact the metastability argument on an instance.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{admits, Counterfunctions, EngineError, Phi};
use crate::hilbert::{OperatorSpec, Point};
use crate::iterates::ResolventPath;
use crate::schedules::IndexFn;

pub type GFn = Rc<dyn Fn(u64) -> u64>;

pub(crate) fn sample_ball<R: Rng>(rng: &mut R, center: &Point, radius: f64) -> Point {
    let dim = center.dim();
    loop {
        let z: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let n2: f64 = z.iter().map(|x| x * x).sum();
        if n2 <= 1.0 {
            let off = Point::new(z).expect("finite sample");
            return center.axpy(radius, &off);
        }
    }
}

/// `Δ ≡ delta`, `V ≡ point`.
pub fn constant_adversary(point: Point, delta: f64) -> Counterfunctions {
    Counterfunctions::constant(delta, point)
}

/// Answers depend only on `u` and `seed`: half of the `V` answers are fixed
/// points of `T`, the rest arbitrary points of the ball; `Δ ∈ [10⁻³, 1]`.
pub fn random_adversary(t_op: OperatorSpec, center: Point, radius: f64, seed: u64) -> Counterfunctions {
    let c = center.clone();
    Counterfunctions::new(
        format!("random(seed={seed})"),
        move |u, _| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.rotate_left(17) ^ u.bit_hash());
            Ok(10f64.powf(-3.0 * rng.gen::<f64>()))
        },
        move |u, _| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ u.bit_hash());
            let z = sample_ball(&mut rng, &c, radius);
            if rng.gen_bool(0.5) {
                Ok(t_op.nearest_fixed_point(&z)?)
            } else {
                Ok(z)
            }
        },
    )
}

#[derive(Clone)]
pub struct AnticipatingParams {
    pub eps: f64,
    pub d: u64,
    pub tau: f64,
    pub g: GFn,
    pub h: IndexFn,
    /// Search cap for `J`.
    pub cap: u64,
}

struct Anticipating {
    path: Rc<ResolventPath>,
    p: AnticipatingParams,
    memo: RefCell<HashMap<(u64, u64), (Option<u64>, u64)>>,
}

impl Anticipating {
    fn g_tilde(&self, n: u64) -> u64 {
        n.max((self.p.g)(n))
    }

    /// `g̃_{u,ε}(j)`.
    fn g_u(&self, u: &Point, j: u64) -> Result<u64, EngineError> {
        let m = self.g_tilde(j);
        Ok(if self.path.get(m)?.dist(u) > self.p.eps / 2.0 { m } else { j })
    }

    /// `(J(u, φ), g̃_{u,ε}(J(u, φ)))`; `J` is `None` when no `j ≤ cap` qualifies.
    fn lookup(&self, u: &Point, phi: &Phi) -> Result<(Option<u64>, u64), EngineError> {
        let key = (u.bit_hash(), phi.id());
        if let Some(&hit) = self.memo.borrow().get(&key) {
            return Ok(hit);
        }
        let t_op = self.path.t();
        let mut chosen = None;
        for j in 0..=self.p.cap {
            let m = self.g_u(u, j)?;
            let v = self.path.get(m)?;
            if admits(phi.eval(&v)?, t_op.eval(&v).dist(&v)) {
                chosen = Some((j, m));
                break;
            }
        }
        let out = match chosen {
            Some((j, m)) => (Some(j), m),
            None => (None, self.g_u(u, 0)?),
        };
        self.memo.borrow_mut().insert(key, out);
        Ok(out)
    }

    fn index(&self, u: &Point, phi: &Phi) -> Result<u64, EngineError> {
        Ok(self.lookup(u, phi)?.1)
    }
}

/// Read access to the index search of an anticipating adversary.
#[derive(Clone)]
pub struct AnticipatingProbe(Rc<Anticipating>);

impl AnticipatingProbe {
    /// `J(u, φ)`, or `None` if no index up to the cap qualifies.
    pub fn j(&self, u: &Point, phi: &Phi) -> Result<Option<u64>, EngineError> {
        Ok(self.0.lookup(u, phi)?.0)
    }

    pub fn g_tilde(&self, n: u64) -> u64 {
        self.0.g_tilde(n)
    }

    pub fn path(&self) -> &ResolventPath {
        &self.0.path
    }
}

/// `V(u, φ) = v_{g̃_{u,ε}(J)}` and `Δ(u, φ) = (ε/2)²/(6d(1−τ)h(g̃_{u,ε}(J)))`.
pub fn anticipating_adversary(path: Rc<ResolventPath>, params: AnticipatingParams) -> Counterfunctions {
    anticipating_with_probe(path, params).0
}

pub fn anticipating_with_probe(
    path: Rc<ResolventPath>,
    params: AnticipatingParams,
) -> (Counterfunctions, AnticipatingProbe) {
    let a = Rc::new(Anticipating { path, p: params, memo: RefCell::new(HashMap::new()) });
    let probe = AnticipatingProbe(Rc::clone(&a));
    let b = Rc::clone(&a);
    let cf = Counterfunctions::new(
        "anticipating",
        move |u, phi| {
            let k = a.index(u, phi)?;
            let h = (a.p.h)(k).map_err(|e| EngineError::InvalidArgument(e.to_string()))?;
            let e2 = (a.p.eps / 2.0).powi(2);
            let v = e2 / (6.0 * a.p.d as f64 * (1.0 - a.p.tau) * h.max(1) as f64);
            Ok(v.min(1.0))
        },
        move |u, phi| {
            let k = b.index(u, phi)?;
            Ok(b.path.get(k)?)
        },
    );
    (cf, probe)
}

/// `V′(u, φ) = V(u, φ)` if `‖Gu − V^t‖ ≤ ‖Gu − (1−t)u − tx‖`, else `x`.
pub fn branch_adversary(inner: Counterfunctions, g: OperatorSpec, t: f64, x: Point) -> Counterfunctions {
    let delta = inner.delta.clone();
    let v = inner.v.clone();
    Counterfunctions::new(
        format!("branch({})", inner.label),
        move |u, phi| delta(u, phi),
        move |u, phi| {
            let w = v(u, phi)?;
            let gu = g.eval(u);
            if gu.dist(&u.lerp(&w, t)) <= gu.dist(&u.lerp(&x, t)) {
                Ok(w)
            } else {
                Ok(x.clone())
            }
        },
    )
}
