use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gridsight::model::IEEE14_PAPER_NAME;
use gridsight::{ieee14_paper, parse_case, Case, CaseFormat, MeasurementId};
use serde::Deserialize;
use sha2::{Digest, Sha256};

/// Load the case named on the command line. With no path, or with the
/// bundled file name when no such file exists on disk, the bundled 14-bus
/// case is used.
pub fn load_case(path: Option<&Path>) -> Result<Case> {
    let Some(path) = path else {
        return Ok(ieee14_paper());
    };
    if !path.exists() && path.file_name().is_some_and(|n| n == IEEE14_PAPER_NAME) {
        return Ok(ieee14_paper());
    }
    let bytes = fs::read(path).with_context(|| format!("reading case file {}", path.display()))?;
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some("m") => CaseFormat::Matpower,
        _ => CaseFormat::Json,
    };
    parse_case(&bytes, format).with_context(|| format!("parsing case file {}", path.display()))
}

/// SHA-256 of the canonical JSON serialization, hex encoded.
pub fn case_digest(case: &Case) -> String {
    hex::encode(Sha256::digest(case.canonical_json().as_bytes()))
}

/// Resolve one measurement token: a label such as `F2` or `I4`, or a numeric id.
pub fn measurement(case: &Case, token: &str) -> Result<MeasurementId> {
    let token = token.trim();
    match case.resolve_measurement(token) {
        Some(id) => Ok(id),
        None => bail!("unknown measurement `{token}`"),
    }
}

/// Resolve a comma-separated list of measurement tokens.
pub fn measurement_list(case: &Case, list: &str) -> Result<BTreeSet<MeasurementId>> {
    list.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| measurement(case, t))
        .collect()
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Token {
    Id(u32),
    Label(String),
}

/// Read a JSON array of measurement ids or labels from a file.
pub fn measurement_file(case: &Case, path: &PathBuf) -> Result<BTreeSet<MeasurementId>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let tokens: Vec<Token> = serde_json::from_str(&text).with_context(|| {
        format!(
            "{} must hold a JSON array of measurement ids",
            path.display()
        )
    })?;
    tokens
        .into_iter()
        .map(|t| match t {
            Token::Id(id) => measurement(case, &id.to_string()),
            Token::Label(label) => measurement(case, &label),
        })
        .collect()
}

/// Labels of a measurement set, in id order.
pub fn labels(case: &Case, ids: &BTreeSet<MeasurementId>) -> Vec<String> {
    ids.iter().map(|&m| case.label(m)).collect()
}
