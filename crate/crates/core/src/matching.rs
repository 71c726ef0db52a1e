//! Bipartite matching primitives.
//!
//! All routines are deterministic: left nodes are processed in ascending
//! label order and each left node tries its neighbours in ascending order, so
//! the same graph always yields the same matching.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::MatchingError;

/// Bipartite graph with ordered labels on both sides.
///
/// Nodes are addressed by index into the sorted, de-duplicated label lists;
/// adjacency lists are sorted and free of duplicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph<L, R> {
    left: Vec<L>,
    right: Vec<R>,
    adj: Vec<Vec<usize>>,
}

impl<L: Ord + Clone, R: Ord + Clone> BipartiteGraph<L, R> {
    /// Builds a graph from node labels and labelled edges.
    ///
    /// Duplicate labels and duplicate edges are merged. An edge naming a label
    /// that is not among the nodes is an error.
    pub fn new(
        left: impl IntoIterator<Item = L>,
        right: impl IntoIterator<Item = R>,
        edges: impl IntoIterator<Item = (L, R)>,
    ) -> Result<Self, MatchingError> {
        let left: Vec<L> = left
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let right: Vec<R> = right
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut adj = vec![BTreeSet::new(); left.len()];
        for (l, r) in edges {
            let li = left
                .binary_search(&l)
                .map_err(|_| MatchingError::UnknownNode { side: "left" })?;
            let ri = right
                .binary_search(&r)
                .map_err(|_| MatchingError::UnknownNode { side: "right" })?;
            adj[li].insert(ri);
        }
        Ok(BipartiteGraph {
            left,
            right,
            adj: adj.into_iter().map(|s| s.into_iter().collect()).collect(),
        })
    }

    /// Builds a graph whose left nodes are set owners and whose edges join an
    /// owner to each element of its set. Right nodes are the union of the sets.
    pub fn from_sets<'a, I>(sets: I) -> Self
    where
        I: IntoIterator<Item = (&'a L, &'a BTreeSet<R>)>,
        L: 'a,
        R: 'a,
    {
        let sets: Vec<(&L, &BTreeSet<R>)> = sets.into_iter().collect();
        let right: BTreeSet<R> = sets.iter().flat_map(|(_, s)| s.iter().cloned()).collect();
        let edges: Vec<(L, R)> = sets
            .iter()
            .flat_map(|(l, s)| s.iter().map(move |r| ((*l).clone(), r.clone())))
            .collect();
        Self::new(sets.iter().map(|(l, _)| (*l).clone()), right, edges)
            .expect("edges only reference listed nodes")
    }

    pub fn left(&self) -> &[L] {
        &self.left
    }

    pub fn right(&self) -> &[R] {
        &self.right
    }

    pub fn left_index(&self, label: &L) -> Option<usize> {
        self.left.binary_search(label).ok()
    }

    pub fn right_index(&self, label: &R) -> Option<usize> {
        self.right.binary_search(label).ok()
    }

    /// Right neighbours of left node `l`, ascending.
    pub fn neighbors(&self, l: usize) -> &[usize] {
        &self.adj[l]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    /// Same left side, with the given right nodes and their edges deleted.
    pub fn without_right(&self, removed: &BTreeSet<R>) -> Self {
        let keep: Vec<bool> = self.right.iter().map(|r| !removed.contains(r)).collect();
        let mut new_index = vec![usize::MAX; self.right.len()];
        let mut right = Vec::new();
        for (i, r) in self.right.iter().enumerate() {
            if keep[i] {
                new_index[i] = right.len();
                right.push(r.clone());
            }
        }
        let adj = self
            .adj
            .iter()
            .map(|ns| {
                ns.iter()
                    .filter(|&&r| keep[r])
                    .map(|&r| new_index[r])
                    .collect()
            })
            .collect();
        BipartiteGraph {
            left: self.left.clone(),
            right,
            adj,
        }
    }
}

/// A matching of a [`BipartiteGraph`], stored by node index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Matching {
    left_to_right: BTreeMap<usize, usize>,
}

impl Matching {
    pub fn len(&self) -> usize {
        self.left_to_right.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left_to_right.is_empty()
    }

    pub fn partner_of_left(&self, l: usize) -> Option<usize> {
        self.left_to_right.get(&l).copied()
    }

    /// `(left, right)` index pairs ascending by left index.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.left_to_right.iter().map(|(&l, &r)| (l, r))
    }

    /// Matched pairs by label.
    pub fn labelled<L: Ord + Clone, R: Ord + Clone>(
        &self,
        graph: &BipartiteGraph<L, R>,
    ) -> BTreeMap<L, R> {
        self.pairs()
            .map(|(l, r)| (graph.left[l].clone(), graph.right[r].clone()))
            .collect()
    }

    /// True when no node is used twice and every pair is an edge.
    pub fn is_valid_for<L: Ord + Clone, R: Ord + Clone>(
        &self,
        graph: &BipartiteGraph<L, R>,
    ) -> bool {
        let mut used = BTreeSet::new();
        self.pairs().all(|(l, r)| {
            l < graph.left.len() && graph.adj[l].binary_search(&r).is_ok() && used.insert(r)
        })
    }
}

/// Maximum-cardinality matching by augmenting paths (Kuhn's algorithm).
pub fn maximum_matching<L: Ord + Clone, R: Ord + Clone>(graph: &BipartiteGraph<L, R>) -> Matching {
    let mut match_right: Vec<Option<usize>> = vec![None; graph.right.len()];
    for l in 0..graph.left.len() {
        let mut visited = vec![false; graph.right.len()];
        try_augment(graph, l, &mut visited, &mut match_right);
    }
    Matching {
        left_to_right: match_right
            .iter()
            .enumerate()
            .filter_map(|(r, l)| l.map(|l| (l, r)))
            .collect(),
    }
}

fn try_augment<L, R>(
    graph: &BipartiteGraph<L, R>,
    l: usize,
    visited: &mut [bool],
    match_right: &mut [Option<usize>],
) -> bool {
    for &r in &graph.adj[l] {
        if visited[r] {
            continue;
        }
        visited[r] = true;
        let free = match match_right[r] {
            None => true,
            Some(other) => try_augment(graph, other, visited, match_right),
        };
        if free {
            match_right[r] = Some(l);
            return true;
        }
    }
    false
}

/// Number of left nodes left unmatched by a maximum matching.
pub fn left_deficiency<L: Ord + Clone, R: Ord + Clone>(graph: &BipartiteGraph<L, R>) -> usize {
    graph.left.len() - maximum_matching(graph).len()
}

/// Left nodes reachable from `starts` by alternating paths
/// (non-matching edge left to right, matching edge right to left).
fn alternating_reach<L, R>(
    graph: &BipartiteGraph<L, R>,
    matching: &Matching,
    starts: impl IntoIterator<Item = usize>,
) -> (BTreeSet<usize>, BTreeSet<usize>) {
    let mut right_owner: BTreeMap<usize, usize> = BTreeMap::new();
    for (l, r) in matching.pairs() {
        right_owner.insert(r, l);
    }
    let mut lefts: BTreeSet<usize> = BTreeSet::new();
    let mut rights: BTreeSet<usize> = BTreeSet::new();
    let mut queue: VecDeque<usize> = VecDeque::new();
    for s in starts {
        if lefts.insert(s) {
            queue.push_back(s);
        }
    }
    while let Some(l) = queue.pop_front() {
        for &r in &graph.adj[l] {
            if matching.partner_of_left(l) == Some(r) || !rights.insert(r) {
                continue;
            }
            if let Some(&owner) = right_owner.get(&r) {
                if lefts.insert(owner) {
                    queue.push_back(owner);
                }
            }
        }
    }
    (lefts, rights)
}

/// Left nodes that are unmatched in at least one maximum matching.
///
/// `matching` must be maximum. These are exactly the left nodes reachable by
/// an alternating path from a left node it leaves unmatched.
pub fn exposable_left<L: Ord + Clone, R: Ord + Clone>(
    graph: &BipartiteGraph<L, R>,
    matching: &Matching,
) -> BTreeSet<usize> {
    let unmatched = (0..graph.left.len()).filter(|l| matching.partner_of_left(*l).is_none());
    alternating_reach(graph, matching, unmatched).0
}

/// Certificate that a family of sets has no system of distinct
/// representatives: `members.len() > union.len()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HallViolation<L, R> {
    /// Owners of the offending sub-family, ascending.
    pub members: Vec<L>,
    /// Union of their sets, ascending.
    pub union: Vec<R>,
}

/// Picks a distinct representative from every set, or proves none exists.
///
/// On failure the witness is the set of owners reachable by alternating paths
/// from the first owner a maximum matching leaves unmatched.
pub fn distinct_representatives<L: Ord + Clone, R: Ord + Clone>(
    sets: &BTreeMap<L, BTreeSet<R>>,
) -> Result<BTreeMap<L, R>, HallViolation<L, R>> {
    let graph = BipartiteGraph::from_sets(sets.iter());
    let matching = maximum_matching(&graph);
    let unmatched = (0..graph.left.len()).find(|l| matching.partner_of_left(*l).is_none());
    match unmatched {
        None => Ok(matching.labelled(&graph)),
        Some(u) => {
            let (lefts, _) = alternating_reach(&graph, &matching, [u]);
            let members: Vec<L> = lefts.iter().map(|&l| graph.left[l].clone()).collect();
            let union: BTreeSet<R> = members
                .iter()
                .flat_map(|l| sets[l].iter().cloned())
                .collect();
            Err(HallViolation {
                members,
                union: union.into_iter().collect(),
            })
        }
    }
}
