use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::path::PathBuf;

use anyhow::Result;
use gridsight::oracle::MAX_BRUTE_FORCE_CARDINALITY;
use gridsight::{
    assess_removal, brute_force_sparsest, build_assignment, build_csm_graph, full_defense, rank_of,
    residual_invariance, sparsest_attack, sparsest_attack_including, support_realizable,
    threshold_defense, verify_critical_set, CriticalSet, Infeasible, JacobianMatrix, MeasurementId,
    NoiseModel, Observability, Rational, SecurityError, SparsestAttack, ThresholdDefenseError,
};
use serde_json::{json, Value};

use crate::args::DefenseMode;
use crate::context::{joined, rationals, Context};
use crate::input;
use crate::report::{Crosscheck, Outcome};

/// Largest residual change accepted as "unchanged".
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

/// Trials used when checking that an attack leaves residuals unchanged.
pub const RESIDUAL_TRIALS: usize = 100;

macro_rules! certificate_or_return {
    ($ctx:expr) => {
        match $ctx.certificate() {
            Ok(cert) => cert,
            Err(outcome) => return Ok(*outcome),
        }
    };
}

pub fn observability(ctx: &Context) -> Result<Outcome> {
    let mut outcome = match build_assignment(&ctx.case) {
        Observability::Observable(cert) => {
            let assignment: Vec<Value> = cert
                .assignment
                .iter()
                .map(|(m, l)| json!({ "measurement": ctx.label(m), "line": l.0 }))
                .collect();
            let mut table = String::from("observable: yes\n");
            let branches: Vec<String> = cert.branches.iter().map(|l| l.to_string()).collect();
            let _ = writeln!(table, "branches: {}", branches.join(" "));
            table.push_str("measurement  line\n");
            for (m, l) in cert.assignment.iter() {
                let _ = writeln!(table, "{:<11}  {l}", ctx.label(m));
            }
            let unassigned = ctx.labels(&cert.unassigned(&ctx.case));
            let _ = writeln!(table, "unassigned: {}", joined(&unassigned));
            Outcome::positive(
                json!({
                    "observable": true,
                    "branches": cert.branches,
                    "assignment": assignment,
                    "tree_measurements": ctx.labels(&cert.assigned_measurements),
                    "unassigned": unassigned,
                }),
                table,
            )
        }
        Observability::Unobservable(w) => {
            let islands: Vec<Vec<u32>> = w
                .islands
                .iter()
                .map(|i| i.iter().map(|b| b.0).collect())
                .collect();
            let mut table = format!("observable: no\ndeficit: {}\n", w.deficit());
            for island in &islands {
                let buses: Vec<String> = island.iter().map(u32::to_string).collect();
                let _ = writeln!(table, "island: {}", buses.join(" "));
            }
            Outcome::negative(
                json!({
                    "observable": false,
                    "deficit": w.deficit(),
                    "islands": islands,
                    "assigned": ctx.labels(&w.assignment.measurements()),
                }),
                table,
            )
        }
    };
    if ctx.oracle {
        let h = ctx.jacobian()?;
        let rank = rank_of(&h, &ctx.case.measurement_ids())?;
        let mut check = Crosscheck::new();
        check.check(
            "certificate exists iff rank(H) = N - 1",
            (rank == h.n_states()) == !outcome.negative,
            Some(format!(
                "rank {rank}, N - 1 = {}, susceptances {}",
                h.n_states(),
                ctx.policy_name()
            )),
        );
        outcome.crosscheck = Some(check);
    }
    Ok(outcome)
}

fn critical_set_json(ctx: &Context, set: &CriticalSet) -> Value {
    json!({
        "owner": ctx.label(set.owner),
        "members": ctx.labels(&set.members),
        "cardinality": set.len(),
    })
}

pub fn critical_sets(ctx: &Context) -> Result<Outcome> {
    let cert = certificate_or_return!(ctx);
    let sets = ctx.critical_sets(&cert);
    let mut table = format!("{:<6}  {:<4}  members\n", "owner", "size");
    for set in sets.values() {
        let _ = writeln!(
            table,
            "{:<6}  {:<4}  {}",
            ctx.label(set.owner),
            set.len(),
            joined(&ctx.labels(&set.members))
        );
    }
    let critical: BTreeSet<MeasurementId> = sets
        .values()
        .filter(|s| s.len() == 1)
        .map(|s| s.owner)
        .collect();
    let mut outcome = Outcome::positive(
        json!({
            "sets": sets.values().map(|s| critical_set_json(ctx, s)).collect::<Vec<_>>(),
            "critical_measurements": ctx.labels(&critical),
        }),
        table,
    );
    if ctx.oracle {
        let h = ctx.jacobian()?;
        let mut check = Crosscheck::new();
        for set in sets.values() {
            let report = verify_critical_set(&h, &cert, set)?;
            let detail = format!(
                "rank without set {} (expected {}), restore failures {:?}, swap failures {:?}",
                report.rank_after_removal,
                report.expected_rank,
                report
                    .restore_failures
                    .iter()
                    .map(|&m| ctx.label(m))
                    .collect::<Vec<_>>(),
                report
                    .swap_failures
                    .iter()
                    .map(|&m| ctx.label(m))
                    .collect::<Vec<_>>(),
            );
            check.check(
                format!(
                    "C^{} drops the rank by one and every member restores it",
                    ctx.label(set.owner)
                ),
                report.passed(),
                Some(detail),
            );
        }
        outcome.crosscheck = Some(check);
    }
    Ok(outcome)
}

/// Number of supports the enumeration visits: sizes 1..=max_card drawn from
/// `free` measurements, or only those containing a fixed one.
fn support_count(free: usize, max_card: usize, containing: bool) -> u128 {
    let choose = |n: usize, k: usize| -> u128 {
        if k > n {
            return 0;
        }
        (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
    };
    (1..=max_card)
        .map(|k| {
            if containing {
                choose(free.saturating_sub(1), k - 1)
            } else {
                choose(free, k)
            }
        })
        .sum()
}

pub fn sparsest(
    ctx: &Context,
    include: Option<&str>,
    protected: Option<&PathBuf>,
) -> Result<Outcome> {
    let include = include
        .map(|t| input::measurement(&ctx.case, t))
        .transpose()?;
    let protected = match protected {
        Some(path) => input::measurement_file(&ctx.case, path)?,
        None => BTreeSet::new(),
    };
    let cert = certificate_or_return!(ctx);
    let open: BTreeMap<MeasurementId, CriticalSet> = ctx
        .critical_sets(&cert)
        .into_iter()
        .filter(|(_, s)| s.members.is_disjoint(&protected))
        .collect();
    let found: Option<SparsestAttack> = match include {
        Some(k) => match sparsest_attack_including(&ctx.case, &open, k) {
            Ok(attack) => Some(attack),
            Err(SecurityError::NoCoveringSet(_)) => None,
            Err(e) => return Err(e.into()),
        },
        None => sparsest_attack(&open),
    };
    let scope = json!({
        "include": include.map(|k| ctx.label(k)),
        "protected": ctx.labels(&protected),
    });
    let mut outcome = match &found {
        Some(attack) => Outcome::positive(
            json!({
                "found": true,
                "critical_set_of": ctx.label(attack.owner),
                "measurements": ctx.labels(&attack.measurements),
                "cardinality": attack.cardinality,
                "scope": scope,
            }),
            format!(
                "cardinality {}: {} (critical set of {})\n",
                attack.cardinality,
                joined(&ctx.labels(&attack.measurements)),
                ctx.label(attack.owner)
            ),
        ),
        None => Outcome::negative(
            json!({ "found": false, "scope": scope }),
            "no critical set satisfies the constraints\n".into(),
        ),
    };
    if ctx.oracle {
        let h = ctx.jacobian()?;
        let mut check = Crosscheck::new();
        if let Some(attack) = &found {
            let realizable = support_realizable(&h, &attack.measurements)?.is_ok();
            check.check(
                "the reported set is a realizable attack support",
                realizable,
                None,
            );
        }
        let cap = found.as_ref().map_or(MAX_BRUTE_FORCE_CARDINALITY, |a| {
            a.cardinality.min(MAX_BRUTE_FORCE_CARDINALITY)
        });
        let hit = brute_force_sparsest(&h, cap, include, &protected)?;
        let free = ctx.case.measurement_ids().difference(&protected).count();
        let visited = support_count(free, cap, include.is_some());
        let (passed, detail) = match (&hit, &found) {
            (Some(hit), Some(attack)) => (
                hit.cardinality == attack.cardinality,
                format!(
                    "enumeration minimum {} at {}",
                    hit.cardinality,
                    joined(&ctx.labels(&hit.measurements))
                ),
            ),
            (Some(hit), None) => (
                false,
                format!(
                    "enumeration found {}",
                    joined(&ctx.labels(&hit.measurements))
                ),
            ),
            (None, Some(attack)) => (
                attack.cardinality > MAX_BRUTE_FORCE_CARDINALITY,
                format!("nothing up to cardinality {cap}"),
            ),
            (None, None) => (true, format!("nothing up to cardinality {cap}")),
        };
        check.check(
            "exhaustive enumeration finds no smaller attack",
            passed,
            Some(format!(
                "{detail}; {visited} supports over {free} unprotected measurements"
            )),
        );
        outcome.crosscheck = Some(check);
    }
    Ok(outcome)
}

pub fn defense(ctx: &Context, mode: &DefenseMode) -> Result<Outcome> {
    if let Some(tau) = mode.tau {
        if tau < 2 {
            return Err(ThresholdDefenseError::InvalidThreshold(tau).into());
        }
    }
    let cert = certificate_or_return!(ctx);
    let (plan, guarantee) = match mode.tau {
        None => (full_defense(&cert), json!("all")),
        Some(tau) => match threshold_defense(&ctx.critical_sets(&cert), tau) {
            Ok(plan) => (plan, json!({ "threshold": tau })),
            Err(ThresholdDefenseError::Hall(v)) => {
                let members: Vec<String> = v.members.iter().map(|&m| ctx.label(m)).collect();
                let union: Vec<String> = v.union.iter().map(|&m| ctx.label(m)).collect();
                return Ok(Outcome::negative(
                    json!({
                        "hall_violation": { "critical_sets_of": members, "union": union },
                    }),
                    format!(
                        "no distinct representatives: critical sets of {} share only {}\n",
                        joined(&members),
                        joined(&union)
                    ),
                ));
            }
            Err(e) => return Err(e.into()),
        },
    };
    let representatives: BTreeMap<String, String> = plan
        .representatives
        .iter()
        .map(|(&owner, &m)| (ctx.label(owner), ctx.label(m)))
        .collect();
    let protected = ctx.labels(&plan.protected);
    let mut table = format!("protect {}: {}\n", protected.len(), joined(&protected));
    for (&owner, &m) in &plan.representatives {
        let _ = writeln!(table, "  C^{} <- {}", ctx.label(owner), ctx.label(m));
    }
    let mut outcome = Outcome::positive(
        json!({
            "protected": protected,
            "size": plan.protected.len(),
            "guarantee": guarantee,
            "representatives": representatives,
        }),
        table,
    );
    if ctx.oracle {
        let h = ctx.jacobian()?;
        let mut check = Crosscheck::new();
        match mode.tau {
            None => {
                let rank = rank_of(&h, &plan.protected)?;
                check.check(
                    "protected rows alone have rank N - 1, so every stealthy attack touches one",
                    rank == h.n_states(),
                    Some(format!("rank {rank}, N - 1 = {}", h.n_states())),
                );
            }
            Some(tau) => {
                let cap = (tau - 1).min(MAX_BRUTE_FORCE_CARDINALITY);
                let hit = brute_force_sparsest(&h, cap, None, &plan.protected)?;
                let free = ctx
                    .case
                    .measurement_ids()
                    .difference(&plan.protected)
                    .count();
                let detail = match &hit {
                    Some(hit) => format!("open attack {}", joined(&ctx.labels(&hit.measurements))),
                    None => format!(
                        "{} supports of cardinality 1..={cap} over {free} unprotected measurements",
                        support_count(free, cap, false)
                    ),
                };
                check.check(
                    format!("no stealthy attack on fewer than {tau} unprotected measurements"),
                    hit.is_none(),
                    Some(detail),
                );
            }
        }
        outcome.crosscheck = Some(check);
    }
    Ok(outcome)
}

pub fn infeasible_json(ctx: &Context, reason: &Infeasible) -> Value {
    match reason {
        Infeasible::EmptySupport => json!({ "reason": "empty_support" }),
        Infeasible::FullRankComplement { rank } => {
            json!({ "reason": "full_rank_complement", "rank": rank })
        }
        Infeasible::RowSpanned { measurement } => {
            json!({ "reason": "row_spanned", "measurement": ctx.label(*measurement) })
        }
    }
}

/// Residual change of the attack `Hc` under uniform noise seeded from the context.
pub fn residual_deviation(
    ctx: &Context,
    h: &JacobianMatrix,
    c: &[Rational],
    variance: Rational,
    trials: usize,
) -> Result<f64, gridsight::OracleError> {
    let noise = NoiseModel::uniform(h.rows().len(), variance, ctx.seed);
    residual_invariance(h, &noise, c, trials)
}

pub fn default_variance() -> Rational {
    Rational::new(1.into(), 10_000.into())
}

pub fn verify_attack(ctx: &Context, list: &str) -> Result<Outcome> {
    let attacked = input::measurement_list(&ctx.case, list)?;
    let cert = certificate_or_return!(ctx);
    let sets = ctx.critical_sets(&cert);
    let graph = build_csm_graph(&ctx.case, &sets);
    let verdict = assess_removal(&graph, &attacked)?;
    let result = json!({
        "attacked": ctx.labels(&verdict.attacked),
        "stealthy": verdict.stealthy,
        "deficiency": verdict.deficiency,
        "unmatched": ctx.labels(&verdict.unmatched),
        "exposed": ctx.labels(&verdict.exposed),
        "strictness_failures": ctx.labels(&verdict.strictness_failures),
    });
    let table = format!(
        "attack {}: {}\ndeficiency {}\nunmatched: {}\nstrictness failures: {}\n",
        joined(&ctx.labels(&verdict.attacked)),
        if verdict.stealthy {
            "stealthy"
        } else {
            "not stealthy"
        },
        verdict.deficiency,
        joined(&ctx.labels(&verdict.unmatched)),
        joined(&ctx.labels(&verdict.strictness_failures)),
    );
    let mut outcome = if verdict.stealthy {
        Outcome::positive(result, table)
    } else {
        Outcome::negative(result, table)
    };
    if ctx.oracle {
        let h = ctx.jacobian()?;
        let mut check = Crosscheck::new();
        match support_realizable(&h, &attacked)? {
            Ok(attack) => {
                check.check(
                    "an attack a = Hc with exactly this support exists iff the verdict is stealthy",
                    verdict.stealthy,
                    Some(format!(
                        "c = [{}], a = {}",
                        rationals(&attack.c).join(", "),
                        ctx.attack_values(&h, &attack.a)
                    )),
                );
                match residual_deviation(ctx, &h, &attack.c, default_variance(), RESIDUAL_TRIALS) {
                    Ok(dev) => check.check(
                        format!("residuals unchanged over {RESIDUAL_TRIALS} noisy trials"),
                        dev <= RESIDUAL_TOLERANCE,
                        Some(format!("max deviation {dev:e}, noise seed {}", ctx.seed)),
                    ),
                    Err(e) => check.check("residuals unchanged", false, Some(e.to_string())),
                }
            }
            Err(reason) => check.check(
                "an attack a = Hc with exactly this support exists iff the verdict is stealthy",
                !verdict.stealthy,
                Some(infeasible_json(ctx, &reason).to_string()),
            ),
        }
        outcome.crosscheck = Some(check);
    }
    Ok(outcome)
}
