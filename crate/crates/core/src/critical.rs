//! Critical measurement sets.
//!
//! For a tree measurement `m`, its critical set `C^m` is the smallest group of
//! measurements whose joint loss (together with `m`) leaves the two halves of
//! the spanning tree, split at `m`'s line, impossible to reconnect. Members
//! are `m` itself, flows on lines crossing the split, unassigned injections on
//! buses at the split boundary, and those assigned boundary injections that
//! could be moved onto a crossing line because some spare measurement (a
//! "backup") can take over their old job on their own side.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::error::CriticalSetError;
use crate::matching::{maximum_matching, BipartiteGraph};
use crate::model::{BusId, Case, LineId, MeasurementId, MeasurementKind};
use crate::observability::{flow_lines, reconnectable, ReconnectQuery, SpanningTreeCertificate};

/// The spanning tree cut at one measurement's line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TreeSplit {
    pub measurement: MeasurementId,
    /// Line `f(m)` that was cut.
    pub cut_branch: LineId,
    /// Side containing the lowest-numbered bus.
    pub n1: BTreeSet<BusId>,
    pub n2: BTreeSet<BusId>,
    pub b1: BTreeSet<LineId>,
    pub b2: BTreeSet<LineId>,
    /// Buses of `n1` with a line into `n2`.
    pub n12: BTreeSet<BusId>,
    /// Buses of `n2` with a line into `n1`.
    pub n21: BTreeSet<BusId>,
    /// Every line joining the two sides, `f(m)` included.
    pub cut_lines: BTreeSet<LineId>,
    /// Flows on cut lines and injections on boundary buses, `m` excluded.
    pub candidates: BTreeSet<MeasurementId>,
    /// The flow measurements among `candidates`.
    pub candidate_flows: BTreeSet<MeasurementId>,
}

impl TreeSplit {
    fn side_of(&self, bus: BusId) -> &BTreeSet<BusId> {
        if self.n1.contains(&bus) {
            &self.n1
        } else {
            &self.n2
        }
    }

    fn branches_of(&self, bus: BusId) -> &BTreeSet<LineId> {
        if self.n1.contains(&bus) {
            &self.b1
        } else {
            &self.b2
        }
    }
}

/// Why a measurement belongs to a critical set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum MemberReason {
    Owner,
    CutFlow,
    UnassignedInjection,
    /// Assigned boundary injection matched to one of its backups.
    MatchedAssignedInjection {
        matched_backup: MeasurementId,
        backups: BTreeSet<MeasurementId>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CriticalSet {
    pub owner: MeasurementId,
    pub members: BTreeSet<MeasurementId>,
    pub provenance: BTreeMap<MeasurementId, MemberReason>,
}

impl CriticalSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

fn ensure_assigned(
    case: &Case,
    cert: &SpanningTreeCertificate,
    m: MeasurementId,
) -> Result<LineId, CriticalSetError> {
    if case.measurement(m).is_none() {
        return Err(CriticalSetError::UnknownMeasurement(m));
    }
    cert.assignment.get(m).ok_or(CriticalSetError::NotInTree(m))
}

/// Buses reachable from `start` over `branches` (ignoring everything else).
fn component(case: &Case, branches: &BTreeSet<LineId>, start: BusId) -> BTreeSet<BusId> {
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(bus) = queue.pop_front() {
        for &l in case.lines_at(bus) {
            if branches.contains(&l) {
                let next = case.line(l).expect("incident line exists").other_end(bus);
                if seen.insert(next) {
                    queue.push_back(next);
                }
            }
        }
    }
    seen
}

/// Cuts the spanning tree at `f(m)` and classifies everything around the cut.
pub fn split_tree(
    case: &Case,
    cert: &SpanningTreeCertificate,
    m: MeasurementId,
) -> Result<TreeSplit, CriticalSetError> {
    let cut_branch = ensure_assigned(case, cert, m)?;
    let mut rest = cert.branches.clone();
    rest.remove(&cut_branch);

    let first = case.bus_ids().next().expect("case has buses");
    let n1 = component(case, &rest, first);
    let n2: BTreeSet<BusId> = case.bus_ids().filter(|b| !n1.contains(b)).collect();

    let inside = |side: &BTreeSet<BusId>, l: LineId| {
        let line = case.line(l).expect("branch is a line");
        side.contains(&line.from) && side.contains(&line.to)
    };
    let b1 = rest.iter().copied().filter(|&l| inside(&n1, l)).collect();
    let b2 = rest.iter().copied().filter(|&l| inside(&n2, l)).collect();

    let mut cut_lines = BTreeSet::new();
    let mut n12 = BTreeSet::new();
    let mut n21 = BTreeSet::new();
    for line in case.lines() {
        let (a, b) = (line.from, line.to);
        if n1.contains(&a) != n1.contains(&b) {
            cut_lines.insert(line.id);
            let (x, y) = if n1.contains(&a) { (a, b) } else { (b, a) };
            n12.insert(x);
            n21.insert(y);
        }
    }

    let mut candidate_flows = BTreeSet::new();
    let mut candidates = BTreeSet::new();
    for meas in case.measurements() {
        if meas.id == m {
            continue;
        }
        match meas.kind {
            MeasurementKind::Flow(l) if cut_lines.contains(&l) => {
                candidate_flows.insert(meas.id);
                candidates.insert(meas.id);
            }
            MeasurementKind::Injection(bus) if n12.contains(&bus) || n21.contains(&bus) => {
                candidates.insert(meas.id);
            }
            _ => {}
        }
    }

    Ok(TreeSplit {
        measurement: m,
        cut_branch,
        n1,
        n2,
        b1,
        b2,
        n12,
        n21,
        cut_lines,
        candidates,
        candidate_flows,
    })
}

/// Spare measurements that can repair `m_prime`'s side of the split once
/// `m_prime` has moved onto a cut line.
///
/// `m_prime` must be an assigned injection among the split's candidates. The
/// result is empty when no cut line at its bus is free to receive it. Spares
/// are the unassigned injections on `m_prime`'s side that are not themselves
/// candidates; the surviving tree measurements of that side may be reassigned
/// along the way. Unassigned flows never qualify: they only close cycles of
/// flow-measured lines, which cannot cross an injection's branch.
pub fn backup_boundary_injections(
    case: &Case,
    cert: &SpanningTreeCertificate,
    split: &TreeSplit,
    m_prime: MeasurementId,
) -> Result<BTreeSet<MeasurementId>, CriticalSetError> {
    let meas = case
        .measurement(m_prime)
        .ok_or(CriticalSetError::UnknownMeasurement(m_prime))?;
    let own_line = cert.assignment.get(m_prime);
    let bus = match (meas.kind, own_line) {
        (MeasurementKind::Injection(bus), Some(_)) if split.candidates.contains(&m_prime) => bus,
        _ => return Err(CriticalSetError::NotApplicable(m_prime)),
    };
    let own_line = own_line.expect("checked above");

    // Cut-line flows leave together with the owner, so their lines are free.
    let mut removed = split.candidate_flows.clone();
    removed.insert(split.measurement);
    let blocked = flow_lines(case, &removed);
    let has_target = case
        .lines_at(bus)
        .iter()
        .any(|l| split.cut_lines.contains(l) && !blocked.contains(l));
    if !has_target {
        return Ok(BTreeSet::new());
    }

    let region = split.side_of(bus).clone();
    let mut region_branches = split.branches_of(bus).clone();
    region_branches.remove(&own_line);
    let first = *region.first().expect("side is nonempty");
    let part_a = component(case, &region_branches, first);
    let part_b: BTreeSet<BusId> = region.difference(&part_a).copied().collect();

    let base: BTreeSet<MeasurementId> = cert
        .assignment
        .iter()
        .filter(|&(x, l)| x != m_prime && split.branches_of(bus).contains(&l))
        .map(|(x, _)| x)
        .collect();

    let spares = case.measurements().iter().filter(|x| {
        !cert.assigned_measurements.contains(&x.id)
            && !split.candidates.contains(&x.id)
            && matches!(x.kind, MeasurementKind::Injection(b) if region.contains(&b))
    });

    let mut backups = BTreeSet::new();
    for spare in spares {
        let query = ReconnectQuery {
            region: region.clone(),
            part_a: part_a.clone(),
            part_b: part_b.clone(),
            base: base.clone(),
            usable: BTreeSet::from([spare.id]),
            removed: removed.clone(),
        };
        if reconnectable(case, &query).is_some() {
            backups.insert(spare.id);
        }
    }
    Ok(backups)
}

/// Critical set of the tree measurement `m`.
pub fn critical_set(
    case: &Case,
    cert: &SpanningTreeCertificate,
    m: MeasurementId,
) -> Result<CriticalSet, CriticalSetError> {
    let split = split_tree(case, cert, m)?;
    let mut provenance = BTreeMap::new();
    provenance.insert(m, MemberReason::Owner);

    let mut assigned_candidates = Vec::new();
    for &c in &split.candidates {
        if split.candidate_flows.contains(&c) {
            provenance.insert(c, MemberReason::CutFlow);
        } else if !cert.assigned_measurements.contains(&c) {
            provenance.insert(c, MemberReason::UnassignedInjection);
        } else {
            assigned_candidates.push(c);
        }
    }

    let mut backups: BTreeMap<MeasurementId, BTreeSet<MeasurementId>> = BTreeMap::new();
    for &c in &assigned_candidates {
        backups.insert(c, backup_boundary_injections(case, cert, &split, c)?);
    }
    let graph = BipartiteGraph::from_sets(backups.iter());
    let matched = maximum_matching(&graph).labelled(&graph);
    for (owner, backup) in matched {
        provenance.insert(
            owner,
            MemberReason::MatchedAssignedInjection {
                matched_backup: backup,
                backups: backups[&owner].clone(),
            },
        );
    }

    Ok(CriticalSet {
        owner: m,
        members: provenance.keys().copied().collect(),
        provenance,
    })
}

/// Critical sets of every tree measurement, keyed by owner.
pub fn all_critical_sets(
    case: &Case,
    cert: &SpanningTreeCertificate,
) -> BTreeMap<MeasurementId, CriticalSet> {
    cert.assigned_measurements
        .iter()
        .map(|&m| {
            let set = critical_set(case, cert, m).expect("tree measurements have critical sets");
            (m, set)
        })
        .collect()
}

/// True when `m` is its own critical set.
pub fn is_critical_measurement(
    case: &Case,
    cert: &SpanningTreeCertificate,
    m: MeasurementId,
) -> Result<bool, CriticalSetError> {
    Ok(critical_set(case, cert, m)?.members.len() == 1)
}
