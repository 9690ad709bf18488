//! Bound certificates: one checked inequality instance each.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::tol;

/// Key/value context sufficient to replay a certificate check.
pub type Witness = BTreeMap<String, serde_json::Value>;

/// Builds a witness map from serializable values.
#[derive(Debug, Default, Clone)]
pub struct WitnessBuilder(Witness);

impl WitnessBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with<V: Serialize>(mut self, key: &str, value: V) -> Self {
        let v = serde_json::to_value(value).expect("witness value serializes");
        self.0.insert(key.to_string(), v);
        self
    }

    pub fn build(self) -> Witness {
        self.0
    }
}

/// One checked inequality: left side, right side, slack, verdict, and the
/// inputs needed to replay it.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCertificate {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
    pub witness: Witness,
}

impl BoundCertificate {
    /// Certifies `lhs <= rhs` under the standard slack rule: absolute
    /// tolerance `1e-9`, switching to relative once `|rhs| > 1`.
    pub fn certify(name: &str, lhs: f64, rhs: f64, witness: Witness) -> Self {
        let slack = rhs - lhs;
        let pass = slack >= tol::cert_slack_floor(rhs) && lhs.is_finite();
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            slack,
            pass,
            witness,
        }
    }

    /// Certifies `lhs <= rhs` under an explicit absolute tolerance.
    pub fn certify_with_tol(
        name: &str,
        lhs: f64,
        rhs: f64,
        abs_tol: f64,
        witness: Witness,
    ) -> Self {
        let slack = rhs - lhs;
        let pass = slack >= -abs_tol && lhs.is_finite();
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            slack,
            pass,
            witness,
        }
    }
}

/// Aggregate statistics for one inequality across a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct IneqStats {
    /// Checked instances; reports name the field `trials`.
    #[serde(rename = "trials")]
    pub instances: usize,
    pub violations: usize,
    pub min_slack: f64,
    pub worst_witness: Option<BoundCertificate>,
}

impl IneqStats {
    pub fn new() -> Self {
        Self {
            instances: 0,
            violations: 0,
            min_slack: f64::INFINITY,
            worst_witness: None,
        }
    }

    /// Folds one certificate into the aggregate, keeping the worst instance.
    pub fn absorb(&mut self, cert: BoundCertificate) {
        self.instances += 1;
        if !cert.pass {
            self.violations += 1;
        }
        if cert.slack < self.min_slack || self.worst_witness.is_none() {
            self.min_slack = cert.slack.min(self.min_slack);
            self.worst_witness = Some(cert);
        }
    }

    pub fn merge(&mut self, other: IneqStats) {
        self.instances += other.instances;
        self.violations += other.violations;
        if other.min_slack < self.min_slack || self.worst_witness.is_none() {
            self.min_slack = self.min_slack.min(other.min_slack);
            if let Some(w) = other.worst_witness {
                self.worst_witness = Some(w);
            }
        }
    }

    pub fn all_pass(&self) -> bool {
        self.violations == 0
    }
}

impl Default for IneqStats {
    fn default() -> Self {
        Self::new()
    }
}
