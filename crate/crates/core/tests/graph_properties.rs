//! Observability, critical sets and security analysis on random cases,
//! checked against brute-force and algebraic oracles.

use std::collections::{BTreeMap, BTreeSet};

use gridsight::synth::{random_case, RandomCaseParams};
use gridsight::{
    all_critical_sets, boundary_injections, brute_force_sparsest, build_assignment,
    build_csm_graph, build_jacobian, full_defense, is_realizable, parse_case, rank_of,
    sparsest_attack, sparsest_attack_including, split_tree, support_realizable, threshold_defense,
    validate_case, BusId, Case, CaseFormat, LineId, MeasurementKind, SusceptancePolicy,
};
use itertools::Itertools;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn case_from_seed(seed: u64, params: &RandomCaseParams) -> Case {
    random_case(&mut ChaCha8Rng::seed_from_u64(seed), params)
}

fn small() -> RandomCaseParams {
    RandomCaseParams {
        max_buses: 6,
        max_lines: 9,
        ..RandomCaseParams::default()
    }
}

fn find(parent: &mut Vec<u32>, x: u32) -> u32 {
    if parent[x as usize] != x {
        let root = find(parent, parent[x as usize]);
        parent[x as usize] = root;
    }
    parent[x as usize]
}

/// Whether some spanning tree admits a rule-respecting assignment, by trying
/// every (N-1)-subset of lines and backtracking over measurement choices.
fn brute_force_observable(case: &Case) -> bool {
    let n = case.bus_count();
    if n == 1 {
        return true;
    }
    let all_lines: Vec<LineId> = case.lines().iter().map(|l| l.id).collect();
    for tree in all_lines.iter().copied().combinations(n - 1) {
        let mut parent: Vec<u32> = (0..=n as u32).collect();
        let acyclic = tree.iter().all(|&l| {
            let line = case.line(l).unwrap();
            let (a, b) = (find(&mut parent, line.from.0), find(&mut parent, line.to.0));
            parent[a as usize] = b;
            a != b
        });
        if acyclic && assign(case, &tree, &mut BTreeSet::new()) {
            return true;
        }
    }
    false
}

fn assign(case: &Case, lines: &[LineId], used: &mut BTreeSet<u32>) -> bool {
    let Some((&l, rest)) = lines.split_first() else {
        return true;
    };
    let line = case.line(l).unwrap();
    let options: Vec<u32> = case
        .measurements()
        .iter()
        .filter(|m| match m.kind {
            MeasurementKind::Flow(own) => own == l,
            MeasurementKind::Injection(bus) => {
                (bus == line.from || bus == line.to) && case.flow_on(l).is_none()
            }
        })
        .map(|m| m.id.0)
        .collect();
    for m in options {
        if used.insert(m) {
            if assign(case, rest, used) {
                return true;
            }
            used.remove(&m);
        }
    }
    false
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn observability_matches_exhaustive_search(seed in any::<u64>()) {
        let case = case_from_seed(seed, &small());
        let result = build_assignment(&case);
        prop_assert_eq!(result.is_observable(), brute_force_observable(&case));
        if let Some(cert) = result.certificate() {
            prop_assert!(cert.is_valid_for(&case));
        }
    }

    #[test]
    fn observability_matches_rank(seed in any::<u64>()) {
        let case = case_from_seed(seed, &RandomCaseParams::default());
        let h = build_jacobian(&case, SusceptancePolicy::RandomGeneric(0xC0FFEE)).unwrap();
        let rank = rank_of(&h, &case.measurement_ids()).unwrap();
        prop_assert_eq!(build_assignment(&case).is_observable(), rank == h.n_states());
    }

    #[test]
    fn rank_is_policy_independent(seed in any::<u64>()) {
        let case = case_from_seed(seed, &RandomCaseParams::default());
        let a = build_jacobian(&case, SusceptancePolicy::RandomGeneric(1)).unwrap();
        let b = build_jacobian(&case, SusceptancePolicy::RandomGeneric(2)).unwrap();
        let ids: Vec<_> = case.measurement_ids().into_iter().collect();
        for k in 0..=ids.len().min(3) {
            for drop in ids.iter().copied().combinations(k) {
                let keep: BTreeSet<_> = ids.iter().copied().filter(|m| !drop.contains(m)).collect();
                prop_assert_eq!(rank_of(&a, &keep).unwrap(), rank_of(&b, &keep).unwrap());
            }
        }
    }

    #[test]
    fn parse_round_trip(seed in any::<u64>()) {
        let case = case_from_seed(seed, &RandomCaseParams::default());
        prop_assert!(validate_case(&case.to_data()).is_empty());
        let again = parse_case(case.to_json().as_bytes(), CaseFormat::Json).unwrap();
        prop_assert_eq!(&case, &again);
    }

    #[test]
    fn boundary_injections_match_predicate(seed in any::<u64>()) {
        let case = case_from_seed(seed, &RandomCaseParams::default());
        let measured: BTreeSet<LineId> = case
            .measurements()
            .iter()
            .filter_map(|m| match m.kind {
                MeasurementKind::Flow(l) => Some(l),
                MeasurementKind::Injection(_) => None,
            })
            .collect();
        let expected: BTreeSet<_> = case
            .measurements()
            .iter()
            .filter(|m| match m.kind {
                MeasurementKind::Injection(bus) => {
                    let incident: Vec<LineId> = case
                        .lines()
                        .iter()
                        .filter(|l| l.from == bus || l.to == bus)
                        .map(|l| l.id)
                        .collect();
                    incident.iter().any(|l| measured.contains(l))
                        && incident.iter().any(|l| !measured.contains(l))
                }
                MeasurementKind::Flow(_) => false,
            })
            .map(|m| m.id)
            .collect();
        prop_assert_eq!(boundary_injections(&case), expected);
    }

    #[test]
    fn split_matches_union_find(seed in any::<u64>()) {
        let case = case_from_seed(seed, &RandomCaseParams::default());
        let Some(cert) = build_assignment(&case).into_certificate() else {
            return Ok(());
        };
        for &m in &cert.assigned_measurements {
            let split = split_tree(&case, &cert, m).unwrap();
            let cut = cert.assignment.get(m).unwrap();
            let n = case.bus_count() as u32;
            let mut parent: Vec<u32> = (0..=n).collect();
            for &l in cert.branches.iter().filter(|&&l| l != cut) {
                let line = case.line(l).unwrap();
                let (a, b) = (find(&mut parent, line.from.0), find(&mut parent, line.to.0));
                parent[a as usize] = b;
            }
            let root_of_1 = find(&mut parent, 1);
            let side: BTreeSet<BusId> = (1..=n)
                .filter(|&b| find(&mut parent, b) == root_of_1)
                .map(BusId)
                .collect();
            prop_assert_eq!(&split.n1, &side);
            prop_assert!(split.n1.is_disjoint(&split.n2));
            prop_assert_eq!(split.n1.len() + split.n2.len(), case.bus_count());
            prop_assert!(split.cut_lines.contains(&cut));
            prop_assert!(!split.candidates.contains(&m));
            for &l in &split.cut_lines {
                let line = case.line(l).unwrap();
                let (a, b) = (line.from, line.to);
                prop_assert!(
                    (split.n12.contains(&a) && split.n21.contains(&b))
                        || (split.n12.contains(&b) && split.n21.contains(&a))
                );
            }
        }
    }

    #[test]
    fn security_analysis_is_sound(seed in any::<u64>()) {
        let case = case_from_seed(seed, &RandomCaseParams::default());
        let Some(cert) = build_assignment(&case).into_certificate() else {
            return Ok(());
        };
        let h = build_jacobian(&case, SusceptancePolicy::RandomGeneric(0xC0FFEE)).unwrap();
        let sets = all_critical_sets(&case, &cert);
        let g = build_csm_graph(&case, &sets);
        prop_assert!(g.baseline_saturated());
        let edges: usize = sets.values().map(|s| s.len()).sum();
        prop_assert_eq!(g.graph.edge_count(), edges);

        // Every critical set is itself a realizable attack support.
        for s in sets.values() {
            prop_assert!(support_realizable(&h, &s.members).unwrap().is_ok());
        }

        // Enumeration never needs more measurements than the smallest critical set.
        let best = sparsest_attack(&sets).unwrap();
        let brute = brute_force_sparsest(&h, best.cardinality.min(6), None, &BTreeSet::new()).unwrap();
        match brute {
            Some(hit) => prop_assert!(hit.cardinality <= best.cardinality),
            None => prop_assert!(best.cardinality > 6),
        }

        // Per-measurement index: enumeration can only do as well or better.
        let mut smallest_index = usize::MAX;
        for k in case.measurement_ids() {
            let covering = sparsest_attack_including(&case, &sets, k).unwrap();
            let brute = brute_force_sparsest(&h, covering.cardinality.min(6), Some(k), &BTreeSet::new())
                .unwrap();
            match brute {
                Some(hit) => prop_assert!(hit.cardinality <= covering.cardinality),
                None => prop_assert!(covering.cardinality > 6),
            }
            smallest_index = smallest_index.min(covering.cardinality);
        }
        prop_assert_eq!(smallest_index, best.cardinality);

        // Protecting the tree measurements leaves nothing to attack.
        let plan = full_defense(&cert);
        prop_assert_eq!(plan.protected.len(), case.bus_count() - 1);
        let free: Vec<_> = case.measurement_ids().difference(&plan.protected).copied().collect();
        for k in 1..=free.len().min(4) {
            for combo in free.iter().copied().combinations(k) {
                let support: BTreeSet<_> = combo.into_iter().collect();
                prop_assert!(!is_realizable(&h, &support).unwrap());
            }
        }

        // Threshold plans hit every critical set below the threshold with a
        // distinct representative.
        for tau in 2..=4 {
            if let Ok(plan) = threshold_defense(&sets, tau) {
                let small: Vec<_> = sets.values().filter(|s| s.len() < tau).collect();
                prop_assert_eq!(plan.protected.len(), small.len());
                for s in small {
                    prop_assert!(plan.protected.contains(&plan.representatives[&s.owner]));
                    prop_assert!(s.members.contains(&plan.representatives[&s.owner]));
                }
            }
        }
    }
}

#[test]
fn reconnect_examples_on_bundled_case() {
    use gridsight::{ieee14_paper, reconnectable, ReconnectQuery};
    let case = ieee14_paper();
    let cert = build_assignment(&case).into_certificate().unwrap();
    let id = |l: &str| case.resolve_measurement(l).unwrap();
    let buses = |ids: &[u32]| ids.iter().map(|&b| BusId(b)).collect::<BTreeSet<_>>();
    let f2 = id("F2");
    let split = split_tree(&case, &cert, f2).unwrap();
    let base_for = |side: &BTreeSet<LineId>, skip| {
        cert.assignment
            .iter()
            .filter(|&(m, l)| m != skip && side.contains(&l))
            .map(|(m, _)| m)
            .collect::<BTreeSet<_>>()
    };

    // I13 moves to a cut line; I12 takes over line 11.
    let query = ReconnectQuery {
        region: split.n1.clone(),
        part_a: buses(&[1, 5, 6, 10]),
        part_b: buses(&[12, 13]),
        base: base_for(&split.b1, id("I13")),
        usable: BTreeSet::from([id("I12")]),
        removed: BTreeSet::from([f2]),
    };
    let witness = reconnectable(&case, &query).expect("I12 reconnects");
    assert_eq!(witness.get(id("I12")), Some(LineId(11)));
    let empty = ReconnectQuery {
        usable: BTreeSet::new(),
        ..query
    };
    assert!(reconnectable(&case, &empty).is_none());

    // I2 moves to a cut line; I7 cannot reach bus 2.
    let mut rest = split.n2.clone();
    rest.remove(&BusId(2));
    let query = ReconnectQuery {
        region: split.n2.clone(),
        part_a: buses(&[2]),
        part_b: rest,
        base: base_for(&split.b2, id("I2")),
        usable: BTreeSet::from([id("I7")]),
        removed: BTreeSet::from([f2]),
    };
    assert!(reconnectable(&case, &query).is_none());
}

#[test]
fn injection_rows_are_sums_of_flow_rows() {
    let params = RandomCaseParams::default();
    for seed in 0..40 {
        let case = case_from_seed(seed, &params);
        let h = build_jacobian(&case, SusceptancePolicy::RandomGeneric(seed)).unwrap();
        let cols: BTreeMap<BusId, usize> =
            h.cols().iter().enumerate().map(|(i, &b)| (b, i)).collect();
        for m in case.measurements() {
            let MeasurementKind::Injection(bus) = m.kind else {
                continue;
            };
            let mut expected = vec![gridsight::Rational::from_integer(0.into()); h.n_states()];
            for line in case.lines() {
                let b = h.susceptance(line.id).unwrap().clone();
                let sign = if line.from == bus {
                    1
                } else if line.to == bus {
                    -1
                } else {
                    continue;
                };
                let b = if sign > 0 { b } else { -b };
                if let Some(&c) = cols.get(&line.from) {
                    expected[c] += b.clone();
                }
                if let Some(&c) = cols.get(&line.to) {
                    expected[c] -= b;
                }
            }
            assert_eq!(h.row(m.id).unwrap(), expected.as_slice(), "seed {seed}");
        }
    }
}

#[test]
fn threshold_plans_block_small_attacks_on_seeded_cases() {
    let params = RandomCaseParams::default();
    let mut plans = 0;
    for seed in 0..200 {
        let case = case_from_seed(seed, &params);
        let Some(cert) = build_assignment(&case).into_certificate() else {
            continue;
        };
        let h = build_jacobian(&case, SusceptancePolicy::RandomGeneric(0xC0FFEE)).unwrap();
        let sets = all_critical_sets(&case, &cert);
        for tau in 2..=4 {
            if let Ok(plan) = threshold_defense(&sets, tau) {
                plans += 1;
                let hit = brute_force_sparsest(&h, tau - 1, None, &plan.protected).unwrap();
                assert!(hit.is_none(), "seed {seed} tau {tau} hit {hit:?}");
            }
        }
    }
    assert!(plans > 300);
}

/// A 7-bus case where the cocircuit {F8, F1, I5} is not a critical set, so a
/// tau = 4 plan built from critical sets alone leaves it open.
#[test]
fn threshold_plan_misses_non_fundamental_cocircuit() {
    use gridsight::synth::CaseBuilder;
    let mut b = CaseBuilder::new(7);
    for (from, to) in [
        (3, 6),
        (1, 4),
        (4, 5),
        (7, 5),
        (2, 3),
        (2, 4),
        (1, 3),
        (5, 6),
        (1, 2),
        (7, 2),
    ] {
        b = b.line(from, to);
    }
    let case = b
        .flow(8)
        .injection(7)
        .flow(7)
        .flow(1)
        .injection(1)
        .injection(4)
        .flow(5)
        .flow(3)
        .injection(2)
        .injection(5)
        .build();
    let cert = build_assignment(&case).into_certificate().unwrap();
    let h = build_jacobian(&case, SusceptancePolicy::RandomGeneric(0xC0FFEE)).unwrap();
    let sets = all_critical_sets(&case, &cert);
    let plan = threshold_defense(&sets, 4).unwrap();
    let hit = brute_force_sparsest(&h, 3, None, &plan.protected)
        .unwrap()
        .expect("a 3-measurement attack avoids the plan");
    let labels: BTreeSet<String> = hit.measurements.iter().map(|&m| case.label(m)).collect();
    assert_eq!(
        labels,
        BTreeSet::from(["F8".into(), "F1".into(), "I5".into()])
    );
    assert!(sets.values().all(|s| s.members != hit.measurements));
}

#[test]
fn sparsest_attack_matches_enumeration_on_seeded_cases() {
    let params = RandomCaseParams::default();
    let mut checked = 0;
    for seed in 0..200 {
        let case = case_from_seed(seed, &params);
        let Some(cert) = build_assignment(&case).into_certificate() else {
            continue;
        };
        let h = build_jacobian(&case, SusceptancePolicy::RandomGeneric(0xC0FFEE)).unwrap();
        let best = sparsest_attack(&all_critical_sets(&case, &cert)).unwrap();
        if best.cardinality > 6 {
            continue;
        }
        let hit = brute_force_sparsest(&h, best.cardinality, None, &BTreeSet::new())
            .unwrap()
            .expect("the smallest critical set is realizable");
        assert_eq!(hit.cardinality, best.cardinality, "seed {seed}");
        checked += 1;
    }
    assert!(checked > 100);
}
