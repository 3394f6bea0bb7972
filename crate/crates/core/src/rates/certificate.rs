use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::RateValue;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertStatus {
    BoundEvaluated,
    BoundSymbolic,
    VerifiedEmpirically,
}

/// A bound for one instance, with the sub-quantities it was built from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub instance: String,
    pub mode: String,
    pub epsilon: f64,
    pub g: String,
    pub bound: RateValue,
    pub empirical_witness: Option<u64>,
    pub vip_epsilon_prime: Option<RateValue>,
    pub status: CertStatus,
    pub quantities: BTreeMap<String, String>,
}

impl Certificate {
    pub fn new(
        instance: impl Into<String>,
        mode: impl Into<String>,
        epsilon: f64,
        g: impl Into<String>,
        bound: RateValue,
        quantities: BTreeMap<String, String>,
    ) -> Self {
        let status = if bound.is_finite() { CertStatus::BoundEvaluated } else { CertStatus::BoundSymbolic };
        Certificate {
            instance: instance.into(),
            mode: mode.into(),
            epsilon,
            g: g.into(),
            bound,
            empirical_witness: None,
            vip_epsilon_prime: None,
            status,
            quantities,
        }
    }

    pub fn with_eps_prime(mut self, e: Option<RateValue>) -> Self {
        self.vip_epsilon_prime = e;
        self
    }

    /// Records a measured witness; the status is upgraded only when it lies
    /// within a finite bound.
    pub fn with_witness(mut self, w: u64) -> Self {
        self.empirical_witness = Some(w);
        if self.bound.value().is_some() && self.consistent() {
            self.status = CertStatus::VerifiedEmpirically;
        }
        self
    }

    /// `witness ≤ bound` whenever both are finite.
    pub fn consistent(&self) -> bool {
        match (self.empirical_witness, self.bound.value()) {
            (Some(w), Some(b)) => num_bigint::BigUint::from(w) <= *b,
            _ => true,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}
