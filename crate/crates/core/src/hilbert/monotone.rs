use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::operator::random_point;
use super::{ClaimedClass, HilbertError, Matrix, OperatorKind, OperatorSpec, Point};

const MONOTONE_SLACK: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MonotoneMap {
    /// `F(x) = matrix * x + shift`.
    Affine { matrix: Matrix, shift: Point },
    /// Gradient of `x ↦ ½ xᵀ hessian x − linearᵀ x`, i.e. `F(x) = hessian * x − linear`.
    QuadraticGradient { hessian: Matrix, linear: Point },
}

impl MonotoneMap {
    /// The map as `(M, s)` with `F(x) = M x + s`.
    fn linear_parts(&self) -> (Matrix, Point) {
        match self {
            MonotoneMap::Affine { matrix, shift } => (matrix.clone(), shift.clone()),
            MonotoneMap::QuadraticGradient { hessian, linear } => {
                (hessian.clone(), linear.scale(-1.0))
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct MonotoneRepr {
    map: MonotoneMap,
    kappa: f64,
    eta: f64,
}

/// A κ-Lipschitz, η-strongly monotone affine map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MonotoneRepr", into = "MonotoneRepr")]
pub struct MonotoneOpSpec {
    map: MonotoneMap,
    kappa: f64,
    eta: f64,
}

impl TryFrom<MonotoneRepr> for MonotoneOpSpec {
    type Error = HilbertError;
    fn try_from(r: MonotoneRepr) -> Result<Self, Self::Error> {
        MonotoneOpSpec::new(r.map, r.kappa, r.eta)
    }
}

impl From<MonotoneOpSpec> for MonotoneRepr {
    fn from(s: MonotoneOpSpec) -> Self {
        MonotoneRepr { map: s.map, kappa: s.kappa, eta: s.eta }
    }
}

impl MonotoneOpSpec {
    pub fn new(map: MonotoneMap, kappa: f64, eta: f64) -> Result<Self, HilbertError> {
        if !(kappa.is_finite() && kappa > 0.0 && eta.is_finite() && eta > 0.0) {
            return Err(HilbertError::InvalidMonotone(format!(
                "kappa = {kappa}, eta = {eta} must be positive"
            )));
        }
        if eta > kappa {
            return Err(HilbertError::InvalidMonotone(format!(
                "eta = {eta} exceeds kappa = {kappa}"
            )));
        }
        let (m, s) = map.linear_parts();
        if m.rows() != m.cols() || m.rows() != s.dim() {
            return Err(HilbertError::InvalidMonotone("matrix/shift dimensions".into()));
        }
        let spec = MonotoneOpSpec { map, kappa, eta };
        spec.verify(256, 0xf00d)?;
        Ok(spec)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn map(&self) -> &MonotoneMap {
        &self.map
    }

    pub fn dim(&self) -> usize {
        self.map.linear_parts().1.dim()
    }

    pub fn apply(&self, x: &Point) -> Result<Point, HilbertError> {
        let (m, s) = self.map.linear_parts();
        x.check_dim(s.dim())?;
        Ok(m.mul_vec(x).add(&s))
    }

    /// Sample check of strong monotonicity and the Lipschitz bound.
    pub fn verify(&self, samples: usize, seed: u64) -> Result<(), HilbertError> {
        let (m, _) = self.map.linear_parts();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let z = random_point(&mut rng, m.cols(), 1.0);
            let nz = z.norm_sq();
            if nz == 0.0 {
                continue;
            }
            let fz = m.mul_vec(&z);
            if fz.dot(&z) < self.eta * nz * (1.0 - MONOTONE_SLACK) {
                return Err(HilbertError::InvalidMonotone(format!(
                    "strong monotonicity fails: <Fz, z>/|z|^2 = {}",
                    fz.dot(&z) / nz
                )));
            }
            if fz.norm() > self.kappa * nz.sqrt() * (1.0 + MONOTONE_SLACK) {
                return Err(HilbertError::InvalidMonotone(format!(
                    "Lipschitz bound fails: ratio {}",
                    fz.norm() / nz.sqrt()
                )));
            }
        }
        Ok(())
    }
}

/// `G = I − μF` with contraction factor `τ = √(1 − μ(2η − μκ²))`.
pub fn contraction_from_monotone(f: &MonotoneOpSpec, mu: f64) -> Result<OperatorSpec, HilbertError> {
    let upper = 2.0 * f.eta / (f.kappa * f.kappa);
    if !(mu > 0.0 && mu < upper) {
        return Err(HilbertError::InvalidStepSize { mu, upper });
    }
    let tau = (1.0 - mu * (2.0 * f.eta - mu * f.kappa * f.kappa)).max(0.0).sqrt();
    let (m, s) = f.map.linear_parts();
    let matrix = Matrix::identity(m.rows()).combine(1.0, &m, -mu);
    let kind = OperatorKind::AffineMap { matrix, shift: s.scale(-mu) };
    OperatorSpec::new(kind, ClaimedClass::Contraction { tau }, None)
}
