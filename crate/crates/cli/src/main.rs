mod analysis;
mod args;
mod context;
mod dot;
mod input;
mod queries;
mod report;

use std::env;
use std::process::ExitCode;

use anyhow::{Context as _, Result};
use clap::error::ErrorKind;
use clap::Parser;

use crate::args::{Cli, Command, Format};
use crate::context::Context;
use crate::report::{Outcome, Report};

const EXIT_NEGATIVE: u8 = 2;
const EXIT_INPUT: u8 = 1;
const EXIT_USAGE: u8 = 64;

fn parse_seed(text: &str) -> Result<u64> {
    let text = text.trim();
    let parsed = match text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => text.parse(),
    };
    parsed.with_context(|| format!("GRIDSIGHT_SEED must be an unsigned integer, got `{text}`"))
}

fn dispatch(ctx: &Context, command: &Command) -> Result<Outcome> {
    match command {
        Command::Observability => analysis::observability(ctx),
        Command::CriticalSets => analysis::critical_sets(ctx),
        Command::SparsestAttack { include, protected } => {
            analysis::sparsest(ctx, include.as_deref(), protected.as_ref())
        }
        Command::Defense(mode) => analysis::defense(ctx, mode),
        Command::VerifyAttack { measurements } => analysis::verify_attack(ctx, measurements),
        Command::Oracle { query } => queries::oracle(ctx, query),
        Command::Export { target } => queries::export(ctx, target),
    }
}

fn run(cli: Cli) -> Result<u8> {
    let seed = match env::var("GRIDSIGHT_SEED") {
        Ok(value) => parse_seed(&value)?,
        Err(_) => cli.seed,
    };
    let case = input::load_case(cli.case.as_deref())?;
    let case_digest = input::case_digest(&case);
    let ctx = Context {
        case,
        seed,
        oracle: cli.oracle,
    };
    let outcome = dispatch(&ctx, &cli.command)?;
    let code = if outcome.negative { EXIT_NEGATIVE } else { 0 };
    match cli.format {
        Format::Table => {
            print!("{}", outcome.table);
            if let Some(check) = &outcome.crosscheck {
                println!("oracle: {}", if check.passed { "pass" } else { "FAIL" });
                for claim in &check.claims {
                    let status = if claim.passed { "pass" } else { "FAIL" };
                    match &claim.detail {
                        Some(detail) => println!("  [{status}] {} ({detail})", claim.claim),
                        None => println!("  [{status}] {}", claim.claim),
                    }
                }
            }
        }
        Format::Json => {
            let report = Report {
                command: cli.command.name(),
                case_digest,
                result: outcome.result,
                oracle_crosscheck: outcome.crosscheck,
                generated_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            };
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
