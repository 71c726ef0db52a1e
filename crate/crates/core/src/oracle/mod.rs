//! Exact linear-algebra cross-checks on the DC measurement Jacobian.
//!
//! Everything here is independent of the graph algorithms: ranks and null
//! spaces are computed over the rationals, so a disagreement with the
//! topological results points at a real bug rather than a rounding issue.
//! Only [`residual_invariance`] uses floating point.

mod linalg;

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::critical::CriticalSet;
use crate::error::OracleError;
use crate::model::{BusId, Case, LineId, MeasurementId, MeasurementKind, Rational};
use crate::observability::SpanningTreeCertificate;

/// Default seed for generic susceptances.
pub const DEFAULT_SEED: u64 = 0xC0FFEE;

/// Largest support size [`brute_force_sparsest`] will enumerate.
pub const MAX_BRUTE_FORCE_CARDINALITY: usize = 6;

/// Where line susceptances come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SusceptancePolicy {
    /// Use the values stored in the case; every line must have one.
    FromCase,
    /// Distinct random positive rationals drawn from the seed.
    RandomGeneric(u64),
}

/// DC measurement Jacobian `H` with exact entries.
///
/// Rows follow measurement id order, columns the non-reference buses in id
/// order. A flow row on line `(i, j)` holds `+b` in column `i` and `-b` in
/// column `j`; an injection row is the sum of the flow rows of its incident
/// lines, each oriented out of the bus.
#[derive(Debug, Clone)]
pub struct JacobianMatrix {
    rows: Vec<MeasurementId>,
    cols: Vec<BusId>,
    entries: Vec<Vec<Rational>>,
    susceptance: BTreeMap<LineId, Rational>,
    ends: BTreeMap<LineId, (BusId, BusId)>,
    int_rows: Vec<Vec<BigInt>>,
    mod_rows: Vec<Vec<u64>>,
}

fn generic_susceptances(case: &Case, seed: u64) -> BTreeMap<LineId, Rational> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used = BTreeSet::new();
    let mut out = BTreeMap::new();
    for line in case.lines() {
        let value = loop {
            let num: i64 = rng.gen_range(1..=997);
            let den: i64 = rng.gen_range(1..=97);
            let q = Rational::new(num.into(), den.into());
            if used.insert(q.clone()) {
                break q;
            }
        };
        out.insert(line.id, value);
    }
    out
}

pub fn build_jacobian(
    case: &Case,
    policy: SusceptancePolicy,
) -> Result<JacobianMatrix, OracleError> {
    let susceptance = match policy {
        SusceptancePolicy::FromCase => case
            .lines()
            .iter()
            .map(|l| {
                l.susceptance
                    .clone()
                    .map(|b| (l.id, b))
                    .ok_or(OracleError::MissingSusceptance(l.id))
            })
            .collect::<Result<BTreeMap<_, _>, _>>()?,
        SusceptancePolicy::RandomGeneric(seed) => generic_susceptances(case, seed),
    };
    let cols: Vec<BusId> = case
        .bus_ids()
        .filter(|&b| b != case.reference_bus())
        .collect();
    let ends = case
        .lines()
        .iter()
        .map(|l| (l.id, (l.from, l.to)))
        .collect();

    let mut h = JacobianMatrix {
        rows: case.measurements().iter().map(|m| m.id).collect(),
        cols,
        entries: Vec::new(),
        susceptance,
        ends,
        int_rows: Vec::new(),
        mod_rows: Vec::new(),
    };
    let entries: Vec<Vec<Rational>> = case
        .measurements()
        .iter()
        .map(|m| match m.kind {
            MeasurementKind::Flow(l) => h.flow_row(l),
            MeasurementKind::Injection(bus) => {
                let mut row = vec![Rational::zero(); h.cols.len()];
                for &l in case.lines_at(bus) {
                    let flow = h.flow_row(l);
                    let outward = h.ends[&l].0 == bus;
                    for (acc, v) in row.iter_mut().zip(flow) {
                        if outward {
                            *acc += v;
                        } else {
                            *acc -= v;
                        }
                    }
                }
                row
            }
        })
        .collect();
    h.int_rows = entries.iter().map(|r| linalg::integer_row(r)).collect();
    h.mod_rows = h.int_rows.iter().map(|r| linalg::reduce_mod_p(r)).collect();
    h.entries = entries;
    Ok(h)
}

impl JacobianMatrix {
    pub fn rows(&self) -> &[MeasurementId] {
        &self.rows
    }

    pub fn cols(&self) -> &[BusId] {
        &self.cols
    }

    /// Number of state variables (`N - 1`).
    pub fn n_states(&self) -> usize {
        self.cols.len()
    }

    pub fn entries(&self) -> &[Vec<Rational>] {
        &self.entries
    }

    pub fn row_index(&self, m: MeasurementId) -> Option<usize> {
        self.rows.binary_search(&m).ok()
    }

    pub fn row(&self, m: MeasurementId) -> Option<&[Rational]> {
        self.row_index(m).map(|i| self.entries[i].as_slice())
    }

    /// Column of the Jacobian for state `bus`.
    pub fn column(&self, bus: BusId) -> Option<Vec<Rational>> {
        let c = self.cols.binary_search(&bus).ok()?;
        Some(self.entries.iter().map(|r| r[c].clone()).collect())
    }

    pub fn susceptance(&self, line: LineId) -> Option<&Rational> {
        self.susceptance.get(&line)
    }

    /// Row a flow measurement on `line` would have, whether or not one exists.
    pub fn flow_row(&self, line: LineId) -> Vec<Rational> {
        let mut row = vec![Rational::zero(); self.cols.len()];
        let (from, to) = self.ends[&line];
        let b = &self.susceptance[&line];
        if let Ok(c) = self.cols.binary_search(&from) {
            row[c] = b.clone();
        }
        if let Ok(c) = self.cols.binary_search(&to) {
            row[c] = -b.clone();
        }
        row
    }

    fn indices(&self, keep: &BTreeSet<MeasurementId>) -> Result<Vec<usize>, OracleError> {
        keep.iter()
            .map(|&m| self.row_index(m).ok_or(OracleError::UnknownMeasurement(m)))
            .collect()
    }

    fn rank_idx(&self, idx: &[usize]) -> usize {
        let ints: Vec<&[BigInt]> = idx.iter().map(|&i| self.int_rows[i].as_slice()).collect();
        let mods: Vec<&[u64]> = idx.iter().map(|&i| self.mod_rows[i].as_slice()).collect();
        linalg::rank(&ints, &mods, self.cols.len())
    }

    fn complement_idx(&self, removed: &BTreeSet<MeasurementId>) -> Vec<usize> {
        (0..self.rows.len())
            .filter(|&i| !removed.contains(&self.rows[i]))
            .collect()
    }

    /// `H · c`.
    pub fn apply(&self, c: &[Rational]) -> Vec<Rational> {
        self.entries.iter().map(|r| linalg::dot(r, c)).collect()
    }

    fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows.len(), self.cols.len(), |i, j| {
            self.entries[i][j].to_f64().unwrap_or(f64::NAN)
        })
    }
}

/// Exact rank of the rows listed in `keep`.
pub fn rank_of(h: &JacobianMatrix, keep: &BTreeSet<MeasurementId>) -> Result<usize, OracleError> {
    Ok(h.rank_idx(&h.indices(keep)?))
}

/// A stealth attack `a = H c` with support exactly `support`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackVector {
    pub c: Vec<Rational>,
    pub a: Vec<Rational>,
    pub support: BTreeSet<MeasurementId>,
}

/// Why no attack vector has the requested support.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Infeasible {
    EmptySupport,
    /// The untouched rows still determine the state.
    FullRankComplement {
        rank: usize,
    },
    /// This attacked row is a combination of the untouched rows, so it cannot
    /// be altered without also altering one of them.
    RowSpanned {
        measurement: MeasurementId,
    },
}

fn realizability(
    h: &JacobianMatrix,
    support: &BTreeSet<MeasurementId>,
) -> Result<Option<Infeasible>, OracleError> {
    let attacked = h.indices(support)?;
    if attacked.is_empty() {
        return Ok(Some(Infeasible::EmptySupport));
    }
    let rest = h.complement_idx(support);
    let base = h.rank_idx(&rest);
    if base >= h.n_states() {
        return Ok(Some(Infeasible::FullRankComplement { rank: base }));
    }
    for &a in &attacked {
        let mut with = rest.clone();
        with.push(a);
        if h.rank_idx(&with) != base + 1 {
            return Ok(Some(Infeasible::RowSpanned {
                measurement: h.rows[a],
            }));
        }
    }
    Ok(None)
}

/// Builds `c` with `support(H c) = support`, or explains why none exists.
///
/// Feasible iff the untouched rows have rank below `N - 1` and each attacked
/// row is independent of them. The witness is the first vector of the null
/// basis of the untouched rows that no attacked row annihilates, or failing
/// that `sum_j t^j v_j` for the first `t = 1, 2, ...` that works. Each attacked
/// row turns that sum into a nonzero polynomial in `t`, so the search ends.
pub fn support_realizable(
    h: &JacobianMatrix,
    support: &BTreeSet<MeasurementId>,
) -> Result<Result<AttackVector, Infeasible>, OracleError> {
    if let Some(reason) = realizability(h, support)? {
        return Ok(Err(reason));
    }
    let rest = h.complement_idx(support);
    let rest_rows: Vec<&[Rational]> = rest.iter().map(|&i| h.entries[i].as_slice()).collect();
    let basis = linalg::null_space(&rest_rows, h.n_states());
    let attacked = h.indices(support)?;

    let hits_all = |c: &[Rational]| {
        attacked
            .iter()
            .all(|&i| !linalg::dot(&h.entries[i], c).is_zero())
    };
    let found = |c: Vec<Rational>| {
        let a = h.apply(&c);
        Ok(Ok(AttackVector {
            c,
            a,
            support: support.clone(),
        }))
    };

    // A single basis vector gives the sparsest witness when it works.
    if let Some(v) = basis.iter().find(|v| hits_all(v)) {
        return found(v.clone());
    }
    let mut t = Rational::one();
    loop {
        let mut c = vec![Rational::zero(); h.n_states()];
        let mut power = Rational::one();
        for v in &basis {
            for (ci, vi) in c.iter_mut().zip(v) {
                *ci += &power * vi;
            }
            power *= &t;
        }
        if hits_all(&c) {
            return found(c);
        }
        t += Rational::one();
    }
}

/// Whether `support` is exactly the support of some `H c`.
pub fn is_realizable(
    h: &JacobianMatrix,
    support: &BTreeSet<MeasurementId>,
) -> Result<bool, OracleError> {
    Ok(realizability(h, support)?.is_none())
}

/// First realizable support in (cardinality, lexicographic id) order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BruteForceHit {
    pub measurements: BTreeSet<MeasurementId>,
    pub cardinality: usize,
}

/// Exhaustive search for the sparsest stealth attack.
///
/// Supports avoid `protected`, contain `containing` when given, and have at
/// most `max_card` elements. Returns `None` when nothing qualifies.
pub fn brute_force_sparsest(
    h: &JacobianMatrix,
    max_card: usize,
    containing: Option<MeasurementId>,
    protected: &BTreeSet<MeasurementId>,
) -> Result<Option<BruteForceHit>, OracleError> {
    if max_card > MAX_BRUTE_FORCE_CARDINALITY {
        return Err(OracleError::BudgetExceeded {
            requested: max_card,
            budget: MAX_BRUTE_FORCE_CARDINALITY,
        });
    }
    if let Some(k) = containing {
        h.row_index(k).ok_or(OracleError::UnknownMeasurement(k))?;
        if protected.contains(&k) {
            return Ok(None);
        }
    }
    let eligible: Vec<MeasurementId> = h
        .rows
        .iter()
        .copied()
        .filter(|m| !protected.contains(m))
        .collect();
    for card in 1..=max_card.min(eligible.len()) {
        for combo in eligible.iter().copied().combinations(card) {
            if containing.is_some_and(|k| !combo.contains(&k)) {
                continue;
            }
            let support: BTreeSet<MeasurementId> = combo.into_iter().collect();
            if is_realizable(h, &support)? {
                return Ok(Some(BruteForceHit {
                    measurements: support,
                    cardinality: card,
                }));
            }
        }
    }
    Ok(None)
}

/// Diagonal measurement noise `e ~ N(0, R)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoiseModel {
    pub covariance: Vec<Rational>,
    pub seed: u64,
}

impl NoiseModel {
    /// Same variance on every measurement.
    pub fn uniform(measurements: usize, variance: Rational, seed: u64) -> Self {
        NoiseModel {
            covariance: vec![variance; measurements],
            seed,
        }
    }
}

/// Largest change in the residual vector caused by adding `H c` to random
/// measurement vectors.
///
/// Each trial draws a state `x ~ N(0, I)` and noise `e ~ N(0, R)`, forms
/// `z = H x + e`, and compares `W z` with `W (z + H c)` where
/// `W = I - H (H^T R^-1 H)^-1 H^T R^-1`.
pub fn residual_invariance(
    h: &JacobianMatrix,
    noise: &NoiseModel,
    c: &[Rational],
    trials: usize,
) -> Result<f64, OracleError> {
    let (m, n) = (h.rows.len(), h.n_states());
    if noise.covariance.len() != m {
        return Err(OracleError::BadNoiseModel(format!(
            "{} variances for {m} measurements",
            noise.covariance.len()
        )));
    }
    if noise.covariance.iter().any(|v| *v <= Rational::zero()) {
        return Err(OracleError::BadNoiseModel(
            "variances must be positive".into(),
        ));
    }
    if c.len() != n {
        return Err(OracleError::BadNoiseModel(format!(
            "attack has {} states, Jacobian has {n}",
            c.len()
        )));
    }
    if h.rank_idx(&(0..m).collect::<Vec<_>>()) < n {
        return Err(OracleError::SingularNormalMatrix);
    }

    // Whitened Jacobian A = R^{-1/2} H. The weighted residual is the
    // projection of R^{-1/2} z onto the orthogonal complement of range(A),
    // which is W z scaled by R^{-1/2}. Projecting with an orthonormal basis
    // of range(A) avoids forming (H^T R^-1 H)^-1 explicitly.
    let hf = h.to_f64();
    let sigma: Vec<f64> = noise
        .covariance
        .iter()
        .map(|v| v.to_f64().unwrap_or(f64::NAN).sqrt())
        .collect();
    let whitened = DMatrix::from_fn(m, n, |i, j| hf[(i, j)] / sigma[i]);
    let q = whitened.qr().q();
    let residual = |z: &DVector<f64>| {
        let zw = DVector::from_fn(m, |i, _| z[i] / sigma[i]);
        let rw = &zw - &q * (q.transpose() * &zw);
        DVector::from_fn(m, |i, _| rw[i] * sigma[i])
    };

    let cf = DVector::from_iterator(n, c.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)));
    let shift = &hf * cf;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut worst: f64 = 0.0;
    for _ in 0..trials.max(1) {
        let x = DVector::from_fn(n, |_, _| std_normal.sample(&mut rng));
        let e = DVector::from_fn(m, |i, _| sigma[i] * std_normal.sample(&mut rng));
        let z = &hf * x + e;
        let r = residual(&z);
        let ra = residual(&(&z + &shift));
        worst = worst.max((ra - r).amax());
    }
    Ok(worst)
}

/// Rank checks for one critical set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CriticalSetReport {
    pub owner: MeasurementId,
    /// Rank of `H` without the set's rows.
    pub rank_after_removal: usize,
    /// `N - 2`.
    pub expected_rank: usize,
    /// Members whose single re-insertion does not restore rank `N - 1`.
    pub restore_failures: Vec<MeasurementId>,
    /// Assigned injections whose row cannot be swapped for the flow row of
    /// their assigned line without changing the rank of `H`.
    pub swap_failures: Vec<MeasurementId>,
}

impl CriticalSetReport {
    pub fn removal_ok(&self) -> bool {
        self.rank_after_removal == self.expected_rank
    }

    pub fn passed(&self) -> bool {
        self.removal_ok() && self.restore_failures.is_empty() && self.swap_failures.is_empty()
    }
}

/// Checks a critical set against the Jacobian: removing it drops the rank by
/// exactly one, putting back any single member restores it, and every
/// assigned injection in it behaves like a flow on its assigned line.
pub fn verify_critical_set(
    h: &JacobianMatrix,
    cert: &SpanningTreeCertificate,
    cs: &CriticalSet,
) -> Result<CriticalSetReport, OracleError> {
    let n = h.n_states();
    h.indices(&cs.members)?;
    let rest = h.complement_idx(&cs.members);
    let rank_after_removal = h.rank_idx(&rest);

    let mut restore_failures = Vec::new();
    for &w in &cs.members {
        let mut with = rest.clone();
        with.push(h.row_index(w).expect("checked above"));
        if h.rank_idx(&with) != n {
            restore_failures.push(w);
        }
    }

    let all: Vec<usize> = (0..h.rows.len()).collect();
    let full_rank = h.rank_idx(&all);
    let mut swap_failures = Vec::new();
    for &w in &cs.members {
        let (Some(line), Some(i)) = (cert.assignment.get(w), h.row_index(w)) else {
            continue;
        };
        let flow = h.flow_row(line);
        if flow == h.entries[i] {
            continue;
        }
        let swapped: Vec<Vec<Rational>> = h
            .entries
            .iter()
            .enumerate()
            .map(|(j, r)| if j == i { flow.clone() } else { r.clone() })
            .collect();
        let ints: Vec<Vec<BigInt>> = swapped.iter().map(|r| linalg::integer_row(r)).collect();
        let refs: Vec<&[BigInt]> = ints.iter().map(Vec::as_slice).collect();
        if linalg::rank_bareiss(&refs, n) != full_rank {
            swap_failures.push(w);
        }
    }

    Ok(CriticalSetReport {
        owner: cs.owner,
        rank_after_removal,
        expected_rank: n.saturating_sub(1),
        restore_failures,
        swap_failures,
    })
}
