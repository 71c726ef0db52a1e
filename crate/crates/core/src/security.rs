//! Attack and defense analysis on top of the critical sets.
//!
//! The central object is the bipartite graph joining each critical set (by
//! owner) to the measurements it contains. Deleting attacked measurements
//! from its right side and measuring how many critical sets can no longer be
//! matched tells whether the attack breaks observability, and whether every
//! attacked measurement was needed to do so.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::critical::CriticalSet;
use crate::error::SecurityError;
use crate::matching::{
    distinct_representatives, exposable_left, maximum_matching, BipartiteGraph, HallViolation,
    Matching,
};
use crate::model::{Case, MeasurementId};
use crate::observability::SpanningTreeCertificate;

/// Critical sets on the left, all case measurements on the right.
#[derive(Debug, Clone)]
pub struct CsmGraph {
    pub graph: BipartiteGraph<MeasurementId, MeasurementId>,
    pub baseline: Matching,
}

impl CsmGraph {
    pub fn owners(&self) -> &[MeasurementId] {
        self.graph.left()
    }

    /// True when the baseline matching covers every critical set.
    pub fn baseline_saturated(&self) -> bool {
        self.baseline.len() == self.graph.left().len()
    }
}

pub fn build_csm_graph(case: &Case, sets: &BTreeMap<MeasurementId, CriticalSet>) -> CsmGraph {
    let edges: Vec<(MeasurementId, MeasurementId)> = sets
        .iter()
        .flat_map(|(&owner, set)| set.members.iter().map(move |&j| (owner, j)))
        .collect();
    let graph = BipartiteGraph::new(sets.keys().copied(), case.measurement_ids(), edges)
        .expect("critical set members are case measurements");
    let baseline = maximum_matching(&graph);
    CsmGraph { graph, baseline }
}

/// Outcome of deleting a set of measurements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttackVerdict {
    pub attacked: BTreeSet<MeasurementId>,
    /// Critical sets left unmatched by a maximum matching after the removal.
    pub deficiency: usize,
    /// Owners left unmatched by the deterministic maximum matching.
    pub unmatched: BTreeSet<MeasurementId>,
    /// Owners left unmatched by at least one maximum matching.
    pub exposed: BTreeSet<MeasurementId>,
    /// Attacked measurements whose removal did not add to the deficiency.
    pub strictness_failures: BTreeSet<MeasurementId>,
    pub stealthy: bool,
}

fn deficiency_without(
    g: &CsmGraph,
    removed: &BTreeSet<MeasurementId>,
) -> (
    usize,
    BipartiteGraph<MeasurementId, MeasurementId>,
    Matching,
) {
    let sub = g.graph.without_right(removed);
    let matching = maximum_matching(&sub);
    (sub.left().len() - matching.len(), sub, matching)
}

/// Decides whether removing `removed` breaks observability and does so
/// strictly: each removed measurement must account for exactly one more
/// unmatched critical set.
pub fn assess_removal(
    g: &CsmGraph,
    removed: &BTreeSet<MeasurementId>,
) -> Result<AttackVerdict, SecurityError> {
    if let Some(&unknown) = removed.iter().find(|m| g.graph.right_index(m).is_none()) {
        return Err(SecurityError::UnknownMeasurement(unknown));
    }
    let (deficiency, sub, matching) = deficiency_without(g, removed);
    let owner = |i: usize| sub.left()[i];
    let unmatched = (0..sub.left().len())
        .filter(|&i| matching.partner_of_left(i).is_none())
        .map(owner)
        .collect();
    let exposed = exposable_left(&sub, &matching)
        .into_iter()
        .map(owner)
        .collect();

    let mut strictness_failures = BTreeSet::new();
    if deficiency > 0 {
        for &a in removed {
            let mut fewer = removed.clone();
            fewer.remove(&a);
            let (d, _, _) = deficiency_without(g, &fewer);
            if d + 1 != deficiency {
                strictness_failures.insert(a);
            }
        }
    }

    Ok(AttackVerdict {
        attacked: removed.clone(),
        deficiency,
        unmatched,
        exposed,
        stealthy: deficiency >= 1 && strictness_failures.is_empty(),
        strictness_failures,
    })
}

/// A minimum-cardinality critical set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SparsestAttack {
    pub owner: MeasurementId,
    pub measurements: BTreeSet<MeasurementId>,
    pub cardinality: usize,
}

fn smallest<'a>(sets: impl Iterator<Item = &'a CriticalSet>) -> Option<SparsestAttack> {
    // Iteration is by ascending owner, and min_by_key keeps the first minimum.
    sets.min_by_key(|s| s.members.len())
        .map(|s| SparsestAttack {
            owner: s.owner,
            measurements: s.members.clone(),
            cardinality: s.members.len(),
        })
}

/// Smallest critical set overall; ties go to the lowest owner id.
pub fn sparsest_attack(sets: &BTreeMap<MeasurementId, CriticalSet>) -> Option<SparsestAttack> {
    smallest(sets.values())
}

/// Smallest critical set containing `k`; its size is `k`'s security index.
pub fn sparsest_attack_including(
    case: &Case,
    sets: &BTreeMap<MeasurementId, CriticalSet>,
    k: MeasurementId,
) -> Result<SparsestAttack, SecurityError> {
    if case.measurement(k).is_none() {
        return Err(SecurityError::UnknownMeasurement(k));
    }
    smallest(sets.values().filter(|s| s.members.contains(&k)))
        .ok_or(SecurityError::NoCoveringSet(k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "threshold", rename_all = "snake_case")]
pub enum Guarantee {
    /// No stealth attack of any size exists.
    All,
    /// No stealth attack on fewer than this many measurements exists.
    Threshold(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DefensePlan {
    pub protected: BTreeSet<MeasurementId>,
    pub guarantee: Guarantee,
    /// Which protected measurement covers which critical set.
    pub representatives: BTreeMap<MeasurementId, MeasurementId>,
}

/// Protect every tree measurement.
pub fn full_defense(cert: &SpanningTreeCertificate) -> DefensePlan {
    DefensePlan {
        protected: cert.assigned_measurements.clone(),
        guarantee: Guarantee::All,
        representatives: cert.assigned_measurements.iter().map(|&m| (m, m)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ThresholdDefenseError {
    #[error("threshold must be at least 2, got {0}")]
    InvalidThreshold(usize),
    #[error("critical sets {:?} share only {} measurements", .0.members, .0.union.len())]
    Hall(HallViolation<MeasurementId, MeasurementId>),
}

/// Protect one distinct measurement of every critical set smaller than `tau`.
pub fn threshold_defense(
    sets: &BTreeMap<MeasurementId, CriticalSet>,
    tau: usize,
) -> Result<DefensePlan, ThresholdDefenseError> {
    if tau < 2 {
        return Err(ThresholdDefenseError::InvalidThreshold(tau));
    }
    let small: BTreeMap<MeasurementId, BTreeSet<MeasurementId>> = sets
        .iter()
        .filter(|(_, s)| s.members.len() < tau)
        .map(|(&o, s)| (o, s.members.clone()))
        .collect();
    let representatives = distinct_representatives(&small).map_err(ThresholdDefenseError::Hall)?;
    Ok(DefensePlan {
        protected: representatives.values().copied().collect(),
        guarantee: Guarantee::Threshold(tau),
        representatives,
    })
}
