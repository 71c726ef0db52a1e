//! Topological observability, critical measurement sets and stealth-attack
//! analysis for DC power-system state estimation.
//!
//! The crate works on a [`Case`]: a connected bus/line network with real-power
//! flow and injection measurements. From it you can
//!
//! * decide topological observability and obtain a spanning-tree certificate
//!   ([`build_assignment`]),
//! * enumerate the critical measurement set of every tree measurement
//!   ([`all_critical_sets`]),
//! * find sparsest stealth attacks and defense plans ([`security`]),
//! * and cross-check all of the above against exact linear algebra on the
//!   measurement Jacobian ([`oracle`]).

pub mod critical;
pub mod error;
pub mod matching;
pub mod model;
pub mod observability;
pub mod oracle;
pub mod security;
pub mod synth;

pub use critical::{
    all_critical_sets, backup_boundary_injections, critical_set, is_critical_measurement,
    split_tree, CriticalSet, MemberReason, TreeSplit,
};
pub use error::{CriticalSetError, MatchingError, OracleError, ParseError, SecurityError};
pub use matching::{
    distinct_representatives, exposable_left, left_deficiency, maximum_matching, BipartiteGraph,
    HallViolation, Matching,
};
pub use model::{
    ieee14_paper, parse_case, validate_case, Bus, BusId, Case, CaseData, CaseFormat, Invariant,
    Line, LineId, Measurement, MeasurementId, MeasurementKind, Rational, ValidationIssue,
    ValidationReport,
};
pub use observability::{
    boundary_injections, build_assignment, reconnectable, AssignmentFunction, Observability,
    ReconnectQuery, SpanningTreeCertificate, UnobservabilityWitness,
};
pub use oracle::{
    brute_force_sparsest, build_jacobian, is_realizable, rank_of, residual_invariance,
    support_realizable, verify_critical_set, AttackVector, BruteForceHit, CriticalSetReport,
    Infeasible, JacobianMatrix, NoiseModel, SusceptancePolicy,
};
pub use security::{
    assess_removal, build_csm_graph, full_defense, sparsest_attack, sparsest_attack_including,
    threshold_defense, AttackVerdict, CsmGraph, DefensePlan, Guarantee, SparsestAttack,
    ThresholdDefenseError,
};
