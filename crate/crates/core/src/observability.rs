//! Topological observability.
//!
//! A case is topologically observable when its measurements can be assigned
//! injectively to lines so that the assigned lines form a spanning tree. A
//! flow measurement may only be assigned to its own line; an injection may be
//! assigned to any line incident to its bus that carries no flow measurement.
//!
//! The search is an exact matroid intersection between the graphic matroid of
//! the network and the partition matroid "each measurement used at most once".
//! A deterministic greedy pass (flows first, then injections, both by
//! ascending id, each trying lines by ascending id) produces the canonical
//! assignment in the common case; shortest augmenting paths then extend it to
//! a maximum common independent set whenever the greedy pass gets stuck.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::model::{BusId, Case, LineId, MeasurementId, MeasurementKind};

/// Injective map from measurements to lines.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct AssignmentFunction {
    map: BTreeMap<MeasurementId, LineId>,
}

impl AssignmentFunction {
    pub fn new(map: BTreeMap<MeasurementId, LineId>) -> Self {
        AssignmentFunction { map }
    }

    pub fn get(&self, m: MeasurementId) -> Option<LineId> {
        self.map.get(&m).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (MeasurementId, LineId)> + '_ {
        self.map.iter().map(|(&m, &l)| (m, l))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn measurements(&self) -> BTreeSet<MeasurementId> {
        self.map.keys().copied().collect()
    }

    pub fn lines(&self) -> BTreeSet<LineId> {
        self.map.values().copied().collect()
    }

    /// Measurement assigned to `line`, if any.
    pub fn measurement_on(&self, line: LineId) -> Option<MeasurementId> {
        self.map.iter().find(|(_, &l)| l == line).map(|(&m, _)| m)
    }

    /// Checks the assignment rules against `case`: injective, flows on their
    /// own line, injections on an incident line carrying no flow measurement.
    pub fn is_admissible(&self, case: &Case) -> bool {
        let mut used = BTreeSet::new();
        self.iter().all(|(m, l)| {
            let (Some(meas), Some(line)) = (case.measurement(m), case.line(l)) else {
                return false;
            };
            let rule = match meas.kind {
                MeasurementKind::Flow(own) => own == l,
                MeasurementKind::Injection(bus) => line.touches(bus) && case.flow_on(l).is_none(),
            };
            rule && used.insert(l)
        })
    }
}

/// Proof of observability: an admissible assignment whose lines form a
/// spanning tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpanningTreeCertificate {
    pub assignment: AssignmentFunction,
    /// Tree branches `B`, ascending.
    pub branches: BTreeSet<LineId>,
    /// Tree measurements `M^C`, ascending.
    pub assigned_measurements: BTreeSet<MeasurementId>,
}

impl SpanningTreeCertificate {
    fn from_assignment(assignment: AssignmentFunction) -> Self {
        SpanningTreeCertificate {
            branches: assignment.lines(),
            assigned_measurements: assignment.measurements(),
            assignment,
        }
    }

    /// Measurements of `case` outside the tree, ascending.
    pub fn unassigned(&self, case: &Case) -> BTreeSet<MeasurementId> {
        case.measurement_ids()
            .difference(&self.assigned_measurements)
            .copied()
            .collect()
    }

    /// True when the branches form a spanning tree of `case` and the
    /// assignment is admissible.
    pub fn is_valid_for(&self, case: &Case) -> bool {
        if self.branches.len() + 1 != case.bus_count() || !self.assignment.is_admissible(case) {
            return false;
        }
        let mut dsu = Dsu::new(case.bus_count());
        self.branches.iter().all(|&l| match case.line(l) {
            Some(line) => dsu.union(line.from, line.to),
            None => false,
        })
    }
}

/// Proof of unobservability: a maximum admissible assignment and the islands
/// its lines leave the network split into.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnobservabilityWitness {
    pub assignment: AssignmentFunction,
    /// Connected components of the assigned lines, each ascending, ordered by
    /// smallest bus.
    pub islands: Vec<Vec<BusId>>,
}

impl UnobservabilityWitness {
    /// Number of additional independent measurements needed.
    pub fn deficit(&self) -> usize {
        self.islands.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Observability {
    Observable(SpanningTreeCertificate),
    Unobservable(UnobservabilityWitness),
}

impl Observability {
    pub fn is_observable(&self) -> bool {
        matches!(self, Observability::Observable(_))
    }

    pub fn certificate(&self) -> Option<&SpanningTreeCertificate> {
        match self {
            Observability::Observable(c) => Some(c),
            Observability::Unobservable(_) => None,
        }
    }

    pub fn into_certificate(self) -> Option<SpanningTreeCertificate> {
        match self {
            Observability::Observable(c) => Some(c),
            Observability::Unobservable(_) => None,
        }
    }
}

/// Decides topological observability of the whole case.
pub fn build_assignment(case: &Case) -> Observability {
    let region: BTreeSet<BusId> = case.bus_ids().collect();
    let active = case.measurement_ids();
    let blocked = flow_lines(case, &BTreeSet::new());
    let forest = max_forest(case, &region, &active, &blocked);
    let assignment = AssignmentFunction::new(forest.assignment);
    if forest.components.len() <= 1 {
        Observability::Observable(SpanningTreeCertificate::from_assignment(assignment))
    } else {
        Observability::Unobservable(UnobservabilityWitness {
            assignment,
            islands: forest
                .components
                .into_iter()
                .map(|c| c.into_iter().collect())
                .collect(),
        })
    }
}

/// Injection measurements at buses touching both a flow-measured line and a
/// line without a flow measurement.
pub fn boundary_injections(case: &Case) -> BTreeSet<MeasurementId> {
    case.measurements()
        .iter()
        .filter_map(|m| match m.kind {
            MeasurementKind::Injection(bus) => {
                let lines = case.lines_at(bus);
                let measured = lines.iter().any(|&l| case.flow_on(l).is_some());
                let free = lines.iter().any(|&l| case.flow_on(l).is_none());
                (measured && free).then_some(m.id)
            }
            MeasurementKind::Flow(_) => None,
        })
        .collect()
}

/// A reconnection problem on one side of a split spanning tree.
///
/// `region` is the side's bus set and `part_a`/`part_b` partition it (the
/// side after one of its tree branches has been cut). `base` holds the tree
/// measurements that survive in the region and `usable` the extra
/// measurements that may be brought in. Every measurement in `removed` is
/// considered deleted from the case, which also frees its line for injections
/// when it is a flow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReconnectQuery {
    pub region: BTreeSet<BusId>,
    pub part_a: BTreeSet<BusId>,
    pub part_b: BTreeSet<BusId>,
    pub base: BTreeSet<MeasurementId>,
    pub usable: BTreeSet<MeasurementId>,
    pub removed: BTreeSet<MeasurementId>,
}

/// Whether `base ∪ usable` can be reassigned to span the region using only
/// lines inside it. Returns the spanning assignment as witness.
///
/// Base measurements are free to move to other admissible lines, so chains of
/// reassignment are found as well as direct substitutions.
pub fn reconnectable(case: &Case, query: &ReconnectQuery) -> Option<AssignmentFunction> {
    debug_assert!(query.part_a.is_disjoint(&query.part_b));
    debug_assert_eq!(
        query
            .part_a
            .union(&query.part_b)
            .copied()
            .collect::<BTreeSet<_>>(),
        query.region
    );
    let active: BTreeSet<MeasurementId> = query
        .base
        .union(&query.usable)
        .filter(|m| !query.removed.contains(m))
        .copied()
        .collect();
    let blocked = flow_lines(case, &query.removed);
    let forest = max_forest(case, &query.region, &active, &blocked);
    (forest.components.len() == 1).then(|| AssignmentFunction::new(forest.assignment))
}

/// Lines carrying a flow measurement not listed in `removed`.
pub(crate) fn flow_lines(case: &Case, removed: &BTreeSet<MeasurementId>) -> BTreeSet<LineId> {
    case.measurements()
        .iter()
        .filter(|m| !removed.contains(&m.id))
        .filter_map(|m| match m.kind {
            MeasurementKind::Flow(l) => Some(l),
            MeasurementKind::Injection(_) => None,
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

/// Union-find over bus ids `1..=n`.
#[derive(Debug, Clone)]
pub(crate) struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    pub(crate) fn new(n: usize) -> Self {
        Dsu {
            parent: (0..=n).collect(),
        }
    }

    pub(crate) fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union_idx(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }

    pub(crate) fn union(&mut self, a: BusId, b: BusId) -> bool {
        self.union_idx(a.0 as usize, b.0 as usize)
    }
}

pub(crate) struct Forest {
    pub assignment: BTreeMap<MeasurementId, LineId>,
    /// Components of the region under the assigned lines.
    pub components: Vec<BTreeSet<BusId>>,
}

#[derive(Debug, Clone, Copy)]
struct Pair {
    meas: MeasurementId,
    line: LineId,
    /// Endpoints as flow-forest component roots.
    a: usize,
    b: usize,
}

/// Maximum admissible forest inside `region` using the `active` measurements.
/// Injections may not be assigned to `blocked` lines.
pub(crate) fn max_forest(
    case: &Case,
    region: &BTreeSet<BusId>,
    active: &BTreeSet<MeasurementId>,
    blocked: &BTreeSet<LineId>,
) -> Forest {
    let n = case.bus_count();
    let inside = |l: LineId| {
        case.line(l)
            .is_some_and(|line| region.contains(&line.from) && region.contains(&line.to))
    };

    // Flows can only sit on their own line, so they are placed first and
    // contracted away; the lowest id wins on a cycle.
    let mut base = Dsu::new(n);
    let mut assignment = BTreeMap::new();
    for &m in active {
        if let Some(MeasurementKind::Flow(l)) = case.measurement(m).map(|x| x.kind) {
            if inside(l) {
                let line = case.line(l).expect("flow references a line");
                if base.union(line.from, line.to) {
                    assignment.insert(m, l);
                }
            }
        }
    }

    let mut pairs = Vec::new();
    for &m in active {
        if let Some(MeasurementKind::Injection(bus)) = case.measurement(m).map(|x| x.kind) {
            if !region.contains(&bus) {
                continue;
            }
            for &l in case.lines_at(bus) {
                if blocked.contains(&l) || !inside(l) {
                    continue;
                }
                let line = case.line(l).expect("incident line exists");
                let a = base.find(line.from.0 as usize);
                let b = base.find(line.to.0 as usize);
                if a != b {
                    pairs.push(Pair {
                        meas: m,
                        line: l,
                        a,
                        b,
                    });
                }
            }
        }
    }

    let chosen = intersect(&base, &pairs);
    let mut dsu = base;
    for &i in &chosen {
        let p = pairs[i];
        dsu.union_idx(p.a, p.b);
        assignment.insert(p.meas, p.line);
    }

    let mut components: BTreeMap<usize, BTreeSet<BusId>> = BTreeMap::new();
    for &bus in region {
        components
            .entry(dsu.find(bus.0 as usize))
            .or_default()
            .insert(bus);
    }
    let mut components: Vec<BTreeSet<BusId>> = components.into_values().collect();
    components.sort_by_key(|c| *c.first().expect("component is nonempty"));
    Forest {
        assignment,
        components,
    }
}

/// Maximum common independent set of the graphic matroid (over the
/// contracted graph in `base`) and the partition matroid on measurements.
/// Returns indices into `pairs`, ascending.
fn intersect(base: &Dsu, pairs: &[Pair]) -> Vec<usize> {
    let mut in_s = vec![false; pairs.len()];

    let mut dsu = base.clone();
    let mut used = BTreeSet::new();
    for (i, p) in pairs.iter().enumerate() {
        if !used.contains(&p.meas) && dsu.union_idx(p.a, p.b) {
            used.insert(p.meas);
            in_s[i] = true;
        }
    }

    while let Some(path) = augmenting_path(base, pairs, &in_s) {
        for i in path {
            in_s[i] = !in_s[i];
        }
    }

    (0..pairs.len()).filter(|&i| in_s[i]).collect()
}

/// Shortest path in the exchange graph from an element that keeps the forest
/// acyclic to an element whose measurement is free.
fn augmenting_path(base: &Dsu, pairs: &[Pair], in_s: &[bool]) -> Option<Vec<usize>> {
    let s: Vec<usize> = (0..pairs.len()).filter(|&i| in_s[i]).collect();
    let outside: Vec<usize> = (0..pairs.len()).filter(|&i| !in_s[i]).collect();

    let forest_without = |skip: Option<usize>| {
        let mut d = base.clone();
        for &y in &s {
            if Some(y) != skip {
                d.union_idx(pairs[y].a, pairs[y].b);
            }
        }
        d
    };

    let mut full = forest_without(None);
    let used: BTreeSet<MeasurementId> = s.iter().map(|&y| pairs[y].meas).collect();
    let is_sink = |x: usize| !used.contains(&pairs[x].meas);

    // graphic[y] = outside elements x with S - y + x independent.
    let mut graphic: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &y in &s {
        let mut d = forest_without(Some(y));
        let fits = outside
            .iter()
            .copied()
            .filter(|&x| d.find(pairs[x].a) != d.find(pairs[x].b))
            .collect();
        graphic.insert(y, fits);
    }

    let mut prev: Vec<Option<usize>> = vec![None; pairs.len()];
    let mut seen = vec![false; pairs.len()];
    let mut queue = VecDeque::new();
    for &x in &outside {
        if full.find(pairs[x].a) != full.find(pairs[x].b) {
            seen[x] = true;
            queue.push_back(x);
        }
    }

    while let Some(v) = queue.pop_front() {
        if !in_s[v] {
            if is_sink(v) {
                let mut path = vec![v];
                let mut cur = v;
                while let Some(p) = prev[cur] {
                    path.push(p);
                    cur = p;
                }
                return Some(path);
            }
            // Swap out the element that uses the same measurement.
            for &y in &s {
                if pairs[y].meas == pairs[v].meas && !seen[y] {
                    seen[y] = true;
                    prev[y] = Some(v);
                    queue.push_back(y);
                }
            }
        } else {
            for &x in &graphic[&v] {
                if !seen[x] {
                    seen[x] = true;
                    prev[x] = Some(v);
                    queue.push_back(x);
                }
            }
        }
    }
    None
}
