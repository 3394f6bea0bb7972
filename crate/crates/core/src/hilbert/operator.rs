use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{HilbertError, Matrix, Point};

/// Residual below which a point counts as a numerical fixed point.
pub const FIXED_POINT_TOL: f64 = 1e-10;

const GRAM_SCHMIDT_PIVOT: f64 = 1e-12;
const CLAIM_SLACK: f64 = 1e-12;
const CLAIM_SAMPLES: usize = 64;
const SAMPLE_RADIUS: f64 = 10.0;

/// Operator tree as written in a problem file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorKind {
    Identity,
    ProjectBall { center: Point, radius: f64 },
    ProjectBox { lo: Point, hi: Point },
    /// Projection onto `{x : <normal, x> <= offset}`.
    ProjectHalfspace { normal: Point, offset: f64 },
    /// Projection onto `shift + span(basis)`.
    ProjectAffine { basis: Vec<Point>, shift: Point },
    /// `ops[0] ∘ ops[1] ∘ ... ∘ ops[k-1]`; the last entry is applied first.
    Compose { ops: Vec<OperatorKind> },
    /// `(1 - weight) * left + weight * right`.
    ConvexCombine {
        weight: f64,
        left: Box<OperatorKind>,
        right: Box<OperatorKind>,
    },
    AffineMap { matrix: Matrix, shift: Point },
    ConstantMap { point: Point },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimedClass {
    Nonexpansive,
    Contraction { tau: f64 },
}

impl ClaimedClass {
    pub fn lipschitz(&self) -> f64 {
        match self {
            ClaimedClass::Nonexpansive => 1.0,
            ClaimedClass::Contraction { tau } => *tau,
        }
    }
}

#[derive(Clone, Debug)]
enum Node {
    Identity,
    Ball { center: Point, radius: f64 },
    Boxed { lo: Point, hi: Point },
    Halfspace { normal: Point, offset: f64, norm_sq: f64 },
    Affine { basis: Vec<Point>, shift: Point },
    Compose(Vec<Node>),
    Convex { w: f64, left: Box<Node>, right: Box<Node> },
    Linear { matrix: Matrix, shift: Point },
    Constant(Point),
}

impl Node {
    fn compile(kind: &OperatorKind) -> Result<Node, HilbertError> {
        let node = match kind {
            OperatorKind::Identity => Node::Identity,
            OperatorKind::ProjectBall { center, radius } => {
                if !(radius.is_finite() && *radius >= 0.0) {
                    return Err(HilbertError::Malformed(format!("ball radius {radius}")));
                }
                Node::Ball { center: center.clone(), radius: *radius }
            }
            OperatorKind::ProjectBox { lo, hi } => {
                hi.check_dim(lo.dim())?;
                if lo.coords().iter().zip(hi.coords()).any(|(a, b)| a > b) {
                    return Err(HilbertError::Malformed("box has lo > hi".into()));
                }
                Node::Boxed { lo: lo.clone(), hi: hi.clone() }
            }
            OperatorKind::ProjectHalfspace { normal, offset } => {
                let norm_sq = normal.norm_sq();
                if norm_sq == 0.0 || !offset.is_finite() {
                    return Err(HilbertError::Malformed("degenerate halfspace".into()));
                }
                Node::Halfspace { normal: normal.clone(), offset: *offset, norm_sq }
            }
            OperatorKind::ProjectAffine { basis, shift } => {
                for b in basis {
                    b.check_dim(shift.dim())?;
                }
                Node::Affine { basis: orthonormalize(basis), shift: shift.clone() }
            }
            OperatorKind::Compose { ops } => {
                if ops.is_empty() {
                    return Err(HilbertError::Malformed("empty composition".into()));
                }
                Node::Compose(ops.iter().map(Node::compile).collect::<Result<_, _>>()?)
            }
            OperatorKind::ConvexCombine { weight, left, right } => {
                if !(0.0..=1.0).contains(weight) {
                    return Err(HilbertError::Malformed(format!("convex weight {weight}")));
                }
                Node::Convex {
                    w: *weight,
                    left: Box::new(Node::compile(left)?),
                    right: Box::new(Node::compile(right)?),
                }
            }
            OperatorKind::AffineMap { matrix, shift } => {
                if matrix.rows() != matrix.cols() || matrix.rows() != shift.dim() {
                    return Err(HilbertError::Malformed(format!(
                        "affine map {}x{} with shift of dimension {}",
                        matrix.rows(),
                        matrix.cols(),
                        shift.dim()
                    )));
                }
                Node::Linear { matrix: matrix.clone(), shift: shift.clone() }
            }
            OperatorKind::ConstantMap { point } => Node::Constant(point.clone()),
        };
        node.dim()?;
        Ok(node)
    }

    /// Dimension fixed by the tree, or `None` when every leaf is the identity.
    fn dim(&self) -> Result<Option<usize>, HilbertError> {
        let merge = |a: Option<usize>, b: Option<usize>| match (a, b) {
            (Some(x), Some(y)) if x != y => {
                Err(HilbertError::DimensionMismatch { expected: x, found: y })
            }
            (Some(x), _) | (None, Some(x)) => Ok(Some(x)),
            (None, None) => Ok(None),
        };
        Ok(match self {
            Node::Identity => None,
            Node::Ball { center, .. } => Some(center.dim()),
            Node::Boxed { lo, .. } => Some(lo.dim()),
            Node::Halfspace { normal, .. } => Some(normal.dim()),
            Node::Affine { shift, .. } => Some(shift.dim()),
            Node::Linear { shift, .. } => Some(shift.dim()),
            Node::Constant(p) => Some(p.dim()),
            Node::Compose(ops) => {
                let mut d = None;
                for op in ops {
                    d = merge(d, op.dim()?)?;
                }
                d
            }
            Node::Convex { left, right, .. } => merge(left.dim()?, right.dim()?)?,
        })
    }

    fn apply(&self, x: &Point) -> Point {
        match self {
            Node::Identity => x.clone(),
            Node::Ball { center, radius } => {
                let diff = x.sub(center);
                let r = diff.norm();
                if r <= *radius {
                    x.clone()
                } else {
                    center.axpy(radius / r, &diff)
                }
            }
            Node::Boxed { lo, hi } => Point::raw(
                x.coords()
                    .iter()
                    .zip(lo.coords().iter().zip(hi.coords()))
                    .map(|(v, (a, b))| v.max(*a).min(*b))
                    .collect(),
            ),
            Node::Halfspace { normal, offset, norm_sq } => {
                let excess = normal.dot(x) - offset;
                if excess <= 0.0 {
                    x.clone()
                } else {
                    x.axpy(-excess / norm_sq, normal)
                }
            }
            Node::Affine { basis, shift } => {
                let rel = x.sub(shift);
                basis.iter().fold(shift.clone(), |acc, e| acc.axpy(rel.dot(e), e))
            }
            Node::Compose(ops) => ops.iter().rev().fold(x.clone(), |acc, op| op.apply(&acc)),
            Node::Convex { w, left, right } => left.apply(x).lerp(&right.apply(x), *w),
            Node::Linear { matrix, shift } => matrix.mul_vec(x).add(shift),
            Node::Constant(p) => p.clone(),
        }
    }

    /// Leaf projection sets whose intersection is the fixed-point set, when
    /// the tree is built from projections only.
    fn projection_leaves<'a>(&'a self, out: &mut Vec<&'a Node>) -> bool {
        match self {
            Node::Identity => true,
            Node::Ball { .. } | Node::Boxed { .. } | Node::Halfspace { .. } | Node::Affine { .. } => {
                out.push(self);
                true
            }
            Node::Compose(ops) => ops.iter().all(|op| op.projection_leaves(out)),
            Node::Convex { w, left, right } => {
                if *w == 0.0 {
                    left.projection_leaves(out)
                } else if *w == 1.0 {
                    right.projection_leaves(out)
                } else {
                    left.projection_leaves(out) && right.projection_leaves(out)
                }
            }
            Node::Linear { .. } | Node::Constant(_) => false,
        }
    }
}

fn orthonormalize(basis: &[Point]) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::new();
    for v in basis {
        let mut w = v.clone();
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for e in &out {
                w = w.axpy(-w.dot(e), e);
            }
        }
        let n = w.norm();
        if n > GRAM_SCHMIDT_PIVOT {
            out.push(w.scale(1.0 / n));
        }
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct OperatorSpecRepr {
    op: OperatorKind,
    class: ClaimedClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    witness: Option<Point>,
}

/// A validated operator: tree, claimed Lipschitz class, optional fixed point.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "OperatorSpecRepr", into = "OperatorSpecRepr")]
pub struct OperatorSpec {
    kind: OperatorKind,
    class: ClaimedClass,
    witness: Option<Point>,
    node: Node,
    dim: Option<usize>,
}

impl PartialEq for OperatorSpec {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.class == other.class && self.witness == other.witness
    }
}

impl TryFrom<OperatorSpecRepr> for OperatorSpec {
    type Error = HilbertError;
    fn try_from(r: OperatorSpecRepr) -> Result<Self, Self::Error> {
        OperatorSpec::new(r.op, r.class, r.witness)
    }
}

impl From<OperatorSpec> for OperatorSpecRepr {
    fn from(s: OperatorSpec) -> Self {
        OperatorSpecRepr { op: s.kind, class: s.class, witness: s.witness }
    }
}

impl OperatorSpec {
    /// Compiles the tree, checks the witness and sample-verifies the claim.
    pub fn new(
        kind: OperatorKind,
        class: ClaimedClass,
        witness: Option<Point>,
    ) -> Result<Self, HilbertError> {
        if let ClaimedClass::Contraction { tau } = class {
            if !(0.0..1.0).contains(&tau) {
                return Err(HilbertError::Malformed(format!("contraction factor {tau}")));
            }
        }
        let node = Node::compile(&kind)?;
        let dim = node.dim()?;
        let spec = OperatorSpec { kind, class, witness, node, dim };
        if let Some(w) = &spec.witness {
            let r = fixed_point_residual(&spec, w)?;
            if r > FIXED_POINT_TOL {
                return Err(HilbertError::WitnessNotFixed { residual: r });
            }
        }
        spec.verify_claim(CLAIM_SAMPLES, 0x5eed)?;
        Ok(spec)
    }

    pub fn nonexpansive(kind: OperatorKind) -> Result<Self, HilbertError> {
        Self::new(kind, ClaimedClass::Nonexpansive, None)
    }

    pub fn contraction(kind: OperatorKind, tau: f64) -> Result<Self, HilbertError> {
        Self::new(kind, ClaimedClass::Contraction { tau }, None)
    }

    pub fn identity() -> Self {
        Self::nonexpansive(OperatorKind::Identity).expect("identity is valid")
    }

    pub fn with_witness(self, witness: Point) -> Result<Self, HilbertError> {
        Self::new(self.kind, self.class, Some(witness))
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn class(&self) -> ClaimedClass {
        self.class
    }

    pub fn witness(&self) -> Option<&Point> {
        self.witness.as_ref()
    }

    /// Contraction factor when the claim is a contraction.
    pub fn tau(&self) -> Option<f64> {
        match self.class {
            ClaimedClass::Contraction { tau } => Some(tau),
            ClaimedClass::Nonexpansive => None,
        }
    }

    /// Dimension fixed by the tree; `None` for identity-only trees.
    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    /// Evaluates the tree without a dimension check.
    pub fn eval(&self, x: &Point) -> Point {
        self.node.apply(x)
    }

    pub fn apply(&self, x: &Point) -> Result<Point, HilbertError> {
        if let Some(d) = self.dim {
            x.check_dim(d)?;
        }
        Ok(self.node.apply(x))
    }

    /// Draws random pairs and checks the claimed Lipschitz constant.
    pub fn verify_claim(&self, samples: usize, seed: u64) -> Result<(), HilbertError> {
        let Some(dim) = self.dim else { return Ok(()) };
        let bound = self.class.lipschitz();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let x = random_point(&mut rng, dim, SAMPLE_RADIUS);
            let y = if rng.gen_bool(0.5) {
                random_point(&mut rng, dim, SAMPLE_RADIUS)
            } else {
                x.add(&random_point(&mut rng, dim, 1e-3))
            };
            let dx = x.dist(&y);
            if dx == 0.0 {
                continue;
            }
            let (tx, ty) = (self.eval(&x), self.eval(&y));
            let dt = tx.dist(&ty);
            let rounding = 16.0 * f64::EPSILON * (x.norm() + y.norm() + tx.norm() + ty.norm());
            if dt > bound * dx * (1.0 + CLAIM_SLACK) + rounding + f64::MIN_POSITIVE {
                return Err(HilbertError::ClaimViolated { ratio: dt / dx, bound });
            }
        }
        Ok(())
    }

    /// A fixed point near `x`: the exact projection onto the fixed-point set
    /// for trees built from projections (via Dykstra's algorithm), otherwise
    /// the limit of Krasnoselskii-Mann averaging started at `x`.
    pub fn nearest_fixed_point(&self, x: &Point) -> Result<Point, HilbertError> {
        if let Some(d) = self.dim {
            x.check_dim(d)?;
        }
        if let Node::Constant(p) = &self.node {
            return Ok(p.clone());
        }
        let mut leaves = Vec::new();
        let p = if self.node.projection_leaves(&mut leaves) {
            dykstra(&leaves, x)
        } else {
            mann_fixed_point(self, x)?
        };
        let r = self.eval(&p).dist(&p);
        if r > 1e-9 {
            return Err(HilbertError::NotConverged(format!("residual {r} at {p}")));
        }
        Ok(p)
    }
}

fn dykstra(sets: &[&Node], x: &Point) -> Point {
    match sets.len() {
        0 => return x.clone(),
        1 => return sets[0].apply(x),
        _ => {}
    }
    let mut p = x.clone();
    let mut incr: Vec<Point> = vec![Point::zeros(x.dim()); sets.len()];
    for _ in 0..200_000 {
        let start = p.clone();
        for (k, s) in sets.iter().enumerate() {
            let y = p.add(&incr[k]);
            let q = s.apply(&y);
            incr[k] = y.sub(&q);
            p = q;
        }
        if start.dist(&p) < 1e-15 && sets.iter().all(|s| s.apply(&p).dist(&p) < 1e-12) {
            break;
        }
    }
    p
}

fn mann_fixed_point(op: &OperatorSpec, x: &Point) -> Result<Point, HilbertError> {
    let mut p = x.clone();
    for _ in 0..1_000_000 {
        let tp = op.eval(&p);
        if tp.dist(&p) < 1e-13 {
            return Ok(tp);
        }
        p = p.lerp(&tp, 0.5);
        if !p.is_finite() {
            break;
        }
    }
    Err(HilbertError::NotConverged("averaged iteration".into()))
}

pub(crate) fn random_point<R: Rng>(rng: &mut R, dim: usize, radius: f64) -> Point {
    Point::raw((0..dim).map(|_| rng.gen_range(-radius..=radius)).collect())
}

pub fn apply_operator(op: &OperatorSpec, x: &Point) -> Result<Point, HilbertError> {
    op.apply(x)
}

/// `‖op(x) − x‖`.
pub fn fixed_point_residual(op: &OperatorSpec, x: &Point) -> Result<f64, HilbertError> {
    Ok(op.apply(x)?.dist(x))
}
