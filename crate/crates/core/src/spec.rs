//! Problem files: operators, the contraction, the schedule and the witnesses
//! of one instance, as JSON.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hilbert::{contraction_from_monotone, HilbertError, MonotoneOpSpec, OperatorSpec, Point, FIXED_POINT_TOL};
use crate::iterates::Scheme;
use crate::rates::{EvalPath, MajorantFn, RateOptions, TowerOverrides};
use crate::schedules::{ModulusBundle, Schedule};
use crate::verify::instances::{FamilyInstance, SingleInstance};
use crate::verify::DEFAULT_SEED;

const WITNESS_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed problem file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}

pub type Result<T> = std::result::Result<T, SpecError>;

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(SpecError::Invalid(msg.into()))
}

/// How `G` is obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ContractionSpec {
    /// `G = I − μF` for a κ-Lipschitz, η-strongly monotone `F`.
    Monotone { f: MonotoneOpSpec, mu: f64 },
    /// A named operator claiming a contraction factor.
    Operator { name: String },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathSpec {
    Literal,
    #[default]
    Structural,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MajorantSpec {
    Identity,
    Constant { value: u64 },
    Monomial { coef: u64, exp: u32 },
    Table { values: Vec<u64> },
}

impl MajorantSpec {
    pub fn build(&self) -> Result<MajorantFn> {
        Ok(match self {
            MajorantSpec::Identity => MajorantFn::Identity,
            MajorantSpec::Constant { value } => MajorantFn::constant(*value),
            MajorantSpec::Monomial { coef, exp } => MajorantFn::monomial(*coef, *exp),
            MajorantSpec::Table { values } => {
                if values.is_empty() {
                    return invalid("majorant table is empty");
                }
                MajorantFn::table(values)
            }
        })
    }
}

/// Toy-scale constants replacing parts of the tower; big values are decimal strings.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverrideSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_eps_tilde: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i0: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<MajorantSpec>,
}

fn big(s: &str, what: &str) -> Result<BigUint> {
    s.trim().parse().map_err(|_| SpecError::Invalid(format!("{what} = '{s}' is not a natural number")))
}

impl OverrideSpec {
    pub fn build(&self) -> Result<TowerOverrides> {
        Ok(TowerOverrides {
            n_eps_tilde: self.n_eps_tilde.as_deref().map(|s| big(s, "n_eps_tilde")).transpose()?,
            i0: self.i0,
            k: self.k.as_deref().map(|s| big(s, "k")).transpose()?,
            f: self.f.as_ref().map(MajorantSpec::build).transpose()?,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSpec {
    #[serde(default)]
    pub path: PathSpec,
    #[serde(default)]
    pub overrides: OverrideSpec,
}

fn default_label() -> String {
    "problem".into()
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_budget() -> u64 {
    1_000_000
}

/// A problem file as written.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(default = "default_label")]
    pub label: String,
    pub dimension: usize,
    pub operators: BTreeMap<String, OperatorSpec>,
    /// The single nonexpansive map.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<String>,
    /// Cycle order `T_1, …, T_N` of a family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Vec<String>>,
    pub contraction: ContractionSpec,
    pub schedule: Schedule,
    /// A common fixed point of the `T_i`.
    pub witness: Point,
    /// A fixed point of `G`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_fixed_point: Option<Point>,
    pub start: Point,
    /// The VIP solution when known in closed form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<Point>,
    pub d: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default)]
    pub rates: RateSpec,
}

/// A validated problem with its operators resolved.
#[derive(Clone, Debug)]
pub struct Problem {
    pub spec: ProblemSpec,
    /// `[T]`, or the family in cycle order.
    pub ops: Vec<OperatorSpec>,
    pub g: OperatorSpec,
    pub tau: f64,
    pub family: bool,
}

impl ProblemSpec {
    pub fn from_json(src: &str) -> Result<Self> {
        Ok(serde_json::from_str(src)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let src = fs::read_to_string(path)
            .map_err(|source| SpecError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&src)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem serializes")
    }

    fn resolve(&self, name: &str) -> Result<OperatorSpec> {
        match self.operators.get(name) {
            Some(op) => Ok(op.clone()),
            None => invalid(format!("operator '{name}' is not defined")),
        }
    }

    fn check_dim(&self, what: &str, dim: Option<usize>) -> Result<()> {
        match dim {
            Some(m) if m != self.dimension => {
                invalid(format!("{what} has dimension {m}, the problem has {}", self.dimension))
            }
            _ => Ok(()),
        }
    }

    pub fn validate(&self) -> Result<Problem> {
        if self.dimension == 0 {
            return invalid("dimension must be at least 1");
        }
        if self.d == 0 {
            return invalid("d must be an integer of at least 1");
        }
        for (name, op) in &self.operators {
            self.check_dim(&format!("operator '{name}'"), op.dim())?;
        }
        let (ops, family) = match (&self.t, &self.family) {
            (Some(t), None) => (vec![self.resolve(t)?], false),
            (None, Some(list)) => {
                if list.is_empty() {
                    return invalid("family cycle list is empty");
                }
                if self.schedule.period() != list.len() {
                    return invalid(format!(
                        "schedule period {} differs from the family size N = {}",
                        self.schedule.period(),
                        list.len()
                    ));
                }
                (list.iter().map(|n| self.resolve(n)).collect::<Result<Vec<_>>>()?, true)
            }
            (Some(_), Some(_)) => return invalid("give either t or family, not both"),
            (None, None) => return invalid("one of t or family is required"),
        };
        let g = match &self.contraction {
            ContractionSpec::Monotone { f, mu } => {
                if f.dim() != self.dimension {
                    return invalid(format!("F has dimension {}, the problem has {}", f.dim(), self.dimension));
                }
                contraction_from_monotone(f, *mu)?
            }
            ContractionSpec::Operator { name } => self.resolve(name)?,
        };
        let Some(tau) = g.tau() else {
            return invalid("G must claim a contraction factor below 1");
        };
        self.check_dim("G", g.dim())?;
        for (what, p) in [("witness", &self.witness), ("start", &self.start)] {
            self.check_dim(what, Some(p.dim()))?;
        }
        for (i, t) in ops.iter().enumerate() {
            let r = t.apply(&self.witness)?.dist(&self.witness);
            if r > WITNESS_TOL.max(FIXED_POINT_TOL) {
                return invalid(format!("witness is not fixed by operator {} (residual {r:e})", i + 1));
            }
        }
        if let Some(w) = &self.g_fixed_point {
            self.check_dim("g_fixed_point", Some(w.dim()))?;
            let r = g.apply(w)?.dist(w);
            if r > WITNESS_TOL {
                return invalid(format!("g_fixed_point is not fixed by G (residual {r:e})"));
            }
        }
        if let Some(s) = &self.solution {
            self.check_dim("solution", Some(s.dim()))?;
        }
        self.rates.overrides.build()?;
        Ok(Problem { spec: self.clone(), ops, g, tau, family })
    }
}

impl Problem {
    pub fn from_json(src: &str) -> Result<Self> {
        ProblemSpec::from_json(src)?.validate()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        ProblemSpec::load(path)?.validate()
    }

    pub fn n_family(&self) -> usize {
        self.ops.len()
    }

    pub fn default_scheme(&self) -> Scheme {
        if self.family {
            Scheme::HsdmCyclic
        } else {
            Scheme::HsdmSingle
        }
    }

    pub fn moduli(&self) -> ModulusBundle {
        self.spec.schedule.moduli(self.tau)
    }

    pub fn rate_options(&self) -> RateOptions {
        let path = match self.spec.rates.path {
            PathSpec::Literal => EvalPath::Literal,
            PathSpec::Structural => EvalPath::Structural,
        };
        let overrides = self.spec.rates.overrides.build().expect("validated overrides");
        RateOptions::default().with_path(path).with_overrides(overrides).with_applications(self.spec.budget)
    }

    pub fn single_instance(&self) -> Option<SingleInstance> {
        (!self.family).then(|| SingleInstance {
            label: self.spec.label.clone(),
            t: self.ops[0].clone(),
            g: self.g.clone(),
            tau: self.tau,
            d: self.spec.d,
            witness: self.spec.witness.clone(),
            start: self.spec.start.clone(),
            schedule: self.spec.schedule,
            solution: self.spec.solution.clone(),
        })
    }

    pub fn family_instance(&self) -> FamilyInstance {
        FamilyInstance {
            label: self.spec.label.clone(),
            ops: self.ops.clone(),
            g: self.g.clone(),
            tau: self.tau,
            d: self.spec.d,
            witness: self.spec.witness.clone(),
            start: self.spec.start.clone(),
            schedule: self.spec.schedule,
        }
    }
}
