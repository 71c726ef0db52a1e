use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gridsight::oracle::DEFAULT_SEED;

/// Observability, critical measurement sets and stealth-attack analysis for
/// DC state estimation.
#[derive(Debug, Parser)]
#[command(name = "gridsight", version)]
pub struct Cli {
    /// Case file (JSON, or MATPOWER when the extension is `.m`). Defaults to
    /// the bundled 14-bus case, which is also used when the path is the
    /// missing file `ieee14_paper.json`.
    #[arg(long, global = true, value_name = "FILE")]
    pub case: Option<PathBuf>,

    /// Seed for generic susceptances and noise. `GRIDSIGHT_SEED` overrides it.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Cross-check the result against the exact algebraic oracle.
    #[arg(long, global = true)]
    pub oracle: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide topological observability and print the spanning-tree certificate.
    Observability,
    /// Critical set of every tree measurement.
    CriticalSets,
    /// Smallest stealthy attack, optionally containing one measurement.
    SparsestAttack {
        /// Measurement the attack must contain (label such as `I4`, or id).
        #[arg(long)]
        include: Option<String>,
        /// JSON array of measurements the attacker cannot touch.
        #[arg(long, value_name = "FILE")]
        protected: Option<PathBuf>,
    },
    /// Measurements to protect.
    Defense(DefenseMode),
    /// Decide whether removing the given measurements is a stealthy attack.
    VerifyAttack {
        /// Comma-separated measurement labels or ids.
        #[arg(long, required = true)]
        measurements: String,
    },
    /// Direct queries to the algebraic oracle.
    Oracle {
        #[command(subcommand)]
        query: OracleQuery,
    },
    /// Write a Graphviz DOT rendering.
    Export {
        #[command(subcommand)]
        target: ExportTarget,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct DefenseMode {
    /// Block every stealthy attack.
    #[arg(long)]
    pub all: bool,
    /// Block every stealthy attack on fewer than this many measurements.
    #[arg(long, value_name = "N")]
    pub tau: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum OracleQuery {
    /// Rank of the measurement Jacobian, optionally without some rows.
    Rank {
        #[arg(long, value_name = "LIST")]
        remove: Option<String>,
    },
    /// Whether an attack a = Hc with exactly this support exists.
    Realizable {
        #[arg(long, value_name = "LIST", required = true)]
        measurements: String,
    },
    /// Exhaustive search for the sparsest realizable support.
    BruteForce {
        #[arg(long, default_value_t = 3)]
        max_card: usize,
        #[arg(long)]
        include: Option<String>,
        #[arg(long, value_name = "FILE")]
        protected: Option<PathBuf>,
    },
    /// Largest residual change caused by the attack Hc over noisy trials.
    Residual {
        /// Shift the angle of this bus by one radian.
        #[arg(long, conflicts_with = "state")]
        bus: Option<u32>,
        /// Full state shift as comma-separated rationals, one per non-reference bus.
        #[arg(long, value_name = "LIST")]
        state: Option<String>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Noise variance applied to every measurement.
        #[arg(long, default_value = "1/10000")]
        variance: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExportTarget {
    /// Critical sets against system measurements.
    Csm {
        #[arg(long, value_name = "PATH")]
        output: PathBuf,
    },
    /// Buses and lines, tree branches in bold.
    Network {
        #[arg(long, value_name = "PATH")]
        output: PathBuf,
    },
    /// The spanning tree cut at one measurement's line.
    Split {
        measurement: String,
        #[arg(long, value_name = "PATH")]
        output: PathBuf,
    },
}

impl Command {
    pub fn name(&self) -> String {
        match self {
            Command::Observability => "observability".into(),
            Command::CriticalSets => "critical-sets".into(),
            Command::SparsestAttack { .. } => "sparsest-attack".into(),
            Command::Defense(_) => "defense".into(),
            Command::VerifyAttack { .. } => "verify-attack".into(),
            Command::Oracle { query } => match query {
                OracleQuery::Rank { .. } => "oracle rank".into(),
                OracleQuery::Realizable { .. } => "oracle realizable".into(),
                OracleQuery::BruteForce { .. } => "oracle brute-force".into(),
                OracleQuery::Residual { .. } => "oracle residual".into(),
            },
            Command::Export { target } => match target {
                ExportTarget::Csm { .. } => "export csm".into(),
                ExportTarget::Network { .. } => "export network".into(),
                ExportTarget::Split { .. } => "export split".into(),
            },
        }
    }
}
