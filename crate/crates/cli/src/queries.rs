use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use gridsight::model::parse_rational;
use gridsight::{
    brute_force_sparsest, build_assignment, build_csm_graph, rank_of, split_tree,
    support_realizable, BusId, OracleError, Rational,
};
use num_traits::{One, Zero};
use serde_json::json;

use crate::analysis::{infeasible_json, residual_deviation, RESIDUAL_TOLERANCE};
use crate::args::{ExportTarget, OracleQuery};
use crate::context::{joined, rationals, Context};
use crate::dot::{self, Dot};
use crate::input;
use crate::report::Outcome;

pub fn oracle(ctx: &Context, query: &OracleQuery) -> Result<Outcome> {
    let h = ctx.jacobian()?;
    let susceptances = ctx.policy_name();
    match query {
        OracleQuery::Rank { remove } => {
            let removed = match remove {
                Some(list) => input::measurement_list(&ctx.case, list)?,
                None => BTreeSet::new(),
            };
            let keep: BTreeSet<_> = ctx
                .case
                .measurement_ids()
                .difference(&removed)
                .copied()
                .collect();
            let rank = rank_of(&h, &keep)?;
            Ok(Outcome::positive(
                json!({
                    "rank": rank,
                    "n_states": h.n_states(),
                    "removed": ctx.labels(&removed),
                    "full_rank": rank == h.n_states(),
                    "susceptances": susceptances,
                }),
                format!("rank {rank} of {} states\n", h.n_states()),
            ))
        }
        OracleQuery::Realizable { measurements } => {
            let support = input::measurement_list(&ctx.case, measurements)?;
            match support_realizable(&h, &support)? {
                Ok(attack) => Ok(Outcome::positive(
                    json!({
                        "realizable": true,
                        "support": ctx.labels(&attack.support),
                        "c": rationals(&attack.c),
                        "a": ctx.attack_values(&h, &attack.a),
                        "susceptances": susceptances,
                    }),
                    format!(
                        "realizable: {}\nc = [{}]\n",
                        joined(&ctx.labels(&attack.support)),
                        rationals(&attack.c).join(", ")
                    ),
                )),
                Err(reason) => Ok(Outcome::negative(
                    json!({
                        "realizable": false,
                        "support": ctx.labels(&support),
                        "infeasible": infeasible_json(ctx, &reason),
                        "susceptances": susceptances,
                    }),
                    format!("not realizable: {}\n", infeasible_json(ctx, &reason)),
                )),
            }
        }
        OracleQuery::BruteForce {
            max_card,
            include,
            protected,
        } => {
            let include = include
                .as_deref()
                .map(|t| input::measurement(&ctx.case, t))
                .transpose()?;
            let protected = match protected {
                Some(path) => input::measurement_file(&ctx.case, path)?,
                None => BTreeSet::new(),
            };
            let scope = json!({
                "max_card": max_card,
                "include": include.map(|k| ctx.label(k)),
                "protected": ctx.labels(&protected),
            });
            match brute_force_sparsest(&h, *max_card, include, &protected)? {
                Some(hit) => Ok(Outcome::positive(
                    json!({
                        "found": true,
                        "measurements": ctx.labels(&hit.measurements),
                        "cardinality": hit.cardinality,
                        "scope": scope,
                    }),
                    format!(
                        "cardinality {}: {}\n",
                        hit.cardinality,
                        joined(&ctx.labels(&hit.measurements))
                    ),
                )),
                None => Ok(Outcome::negative(
                    json!({ "found": false, "scope": scope }),
                    format!("no realizable support of cardinality <= {max_card}\n"),
                )),
            }
        }
        OracleQuery::Residual {
            bus,
            state,
            trials,
            variance,
        } => {
            let c = state_vector(ctx, &h, *bus, state.as_deref())?;
            let variance = match parse_rational(variance) {
                Some(v) if v > Rational::zero() => v,
                _ => bail!("variance must be a positive rational, got `{variance}`"),
            };
            if *trials == 0 {
                bail!("trials must be at least 1");
            }
            match residual_deviation(ctx, &h, &c, variance, *trials) {
                Ok(dev) => Ok(Outcome::positive(
                    json!({
                        "c": rationals(&c),
                        "trials": trials,
                        "max_deviation": dev,
                        "within_tolerance": dev <= RESIDUAL_TOLERANCE,
                        "tolerance": RESIDUAL_TOLERANCE,
                        "noise_seed": ctx.seed,
                    }),
                    format!("max residual change {dev:e} over {trials} trials\n"),
                )),
                Err(OracleError::SingularNormalMatrix) => Ok(Outcome::negative(
                    json!({ "reason": "the measurement Jacobian does not have full column rank" }),
                    "H does not have full column rank\n".into(),
                )),
                Err(e) => Err(e.into()),
            }
        }
    }
}

/// The state shift: an explicit vector, a unit shift at one bus, or a unit
/// shift at the first non-reference bus.
fn state_vector(
    ctx: &Context,
    h: &gridsight::JacobianMatrix,
    bus: Option<u32>,
    state: Option<&str>,
) -> Result<Vec<Rational>> {
    let n = h.n_states();
    if let Some(list) = state {
        let values: Vec<Rational> = list
            .split(',')
            .map(|t| parse_rational(t).with_context(|| format!("`{t}` is not a rational")))
            .collect::<Result<_>>()?;
        if values.len() != n {
            bail!(
                "state has {} entries, the case has {n} non-reference buses",
                values.len()
            );
        }
        return Ok(values);
    }
    let mut c = vec![Rational::zero(); n];
    let column = match bus {
        Some(b) => match h.cols().iter().position(|&x| x == BusId(b)) {
            Some(i) => i,
            None if BusId(b) == ctx.case.reference_bus() => bail!("bus {b} is the reference bus"),
            None => bail!("unknown bus {b}"),
        },
        None => 0,
    };
    if n > 0 {
        c[column] = Rational::one();
    }
    Ok(c)
}

fn write_dot(path: &Path, dot: &Dot) -> Result<()> {
    fs::write(path, &dot.text).with_context(|| format!("writing {}", path.display()))
}

pub fn export(ctx: &Context, target: &ExportTarget) -> Result<Outcome> {
    let (path, dot): (&PathBuf, Dot) = match target {
        ExportTarget::Network { output } => {
            let cert = build_assignment(&ctx.case).into_certificate();
            (output, dot::network(&ctx.case, cert.as_ref()))
        }
        ExportTarget::Csm { output } => {
            let cert = match ctx.certificate() {
                Ok(cert) => cert,
                Err(outcome) => return Ok(*outcome),
            };
            let graph = build_csm_graph(&ctx.case, &ctx.critical_sets(&cert));
            (output, dot::csm(&ctx.case, &graph))
        }
        ExportTarget::Split {
            measurement,
            output,
        } => {
            let m = input::measurement(&ctx.case, measurement)?;
            let cert = match ctx.certificate() {
                Ok(cert) => cert,
                Err(outcome) => return Ok(*outcome),
            };
            let split = split_tree(&ctx.case, &cert, m)?;
            (output, dot::split(&ctx.case, &split))
        }
    };
    write_dot(path, &dot)?;
    Ok(Outcome::positive(
        json!({
            "path": path.display().to_string(),
            "nodes": dot.nodes,
            "edges": dot.edges,
        }),
        format!(
            "wrote {} ({} nodes, {} edges)\n",
            path.display(),
            dot.nodes,
            dot.edges
        ),
    ))
}
