use std::collections::{BTreeMap, BTreeSet};

use anyhow::Result;
use gridsight::model::format_rational;
use gridsight::{
    all_critical_sets, build_assignment, build_jacobian, Case, CriticalSet, JacobianMatrix,
    MeasurementId, Observability, Rational, SpanningTreeCertificate, SusceptancePolicy,
};
use serde_json::{json, Value};

use crate::input;
use crate::report::Outcome;

pub struct Context {
    pub case: Case,
    pub seed: u64,
    pub oracle: bool,
}

impl Context {
    /// Line data from the case when every line has it, generic values otherwise.
    pub fn policy(&self) -> SusceptancePolicy {
        if self.case.lines().iter().all(|l| l.susceptance.is_some()) {
            SusceptancePolicy::FromCase
        } else {
            SusceptancePolicy::RandomGeneric(self.seed)
        }
    }

    pub fn policy_name(&self) -> String {
        match self.policy() {
            SusceptancePolicy::FromCase => "case".into(),
            SusceptancePolicy::RandomGeneric(seed) => format!("generic (seed {seed})"),
        }
    }

    pub fn jacobian(&self) -> Result<JacobianMatrix> {
        Ok(build_jacobian(&self.case, self.policy())?)
    }

    /// The spanning-tree certificate, or the negative outcome to report when
    /// the case is unobservable.
    pub fn certificate(&self) -> Result<SpanningTreeCertificate, Box<Outcome>> {
        match build_assignment(&self.case) {
            Observability::Observable(cert) => Ok(cert),
            Observability::Unobservable(w) => Err(Box::new(Outcome::negative(
                json!({
                    "observable": false,
                    "deficit": w.deficit(),
                    "reason": "the case is not topologically observable",
                }),
                format!(
                    "unobservable: {} more independent measurement(s) needed\n",
                    w.deficit()
                ),
            ))),
        }
    }

    pub fn critical_sets(
        &self,
        cert: &SpanningTreeCertificate,
    ) -> BTreeMap<MeasurementId, CriticalSet> {
        all_critical_sets(&self.case, cert)
    }

    pub fn labels(&self, ids: &BTreeSet<MeasurementId>) -> Vec<String> {
        input::labels(&self.case, ids)
    }

    pub fn label(&self, id: MeasurementId) -> String {
        self.case.label(id)
    }

    /// Measurement labels mapped to the nonzero entries of `a`.
    pub fn attack_values(&self, h: &JacobianMatrix, a: &[Rational]) -> Value {
        let map: serde_json::Map<String, Value> = h
            .rows()
            .iter()
            .zip(a)
            .filter(|(_, v)| *v != &Rational::from_integer(0.into()))
            .map(|(&m, v)| (self.label(m), Value::String(format_rational(v))))
            .collect();
        Value::Object(map)
    }
}

pub fn rationals(values: &[Rational]) -> Vec<String> {
    values.iter().map(format_rational).collect()
}

/// Space-separated labels for table output.
pub fn joined(labels: &[String]) -> String {
    labels.join(" ")
}
