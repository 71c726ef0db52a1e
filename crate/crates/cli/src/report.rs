use serde::Serialize;
use serde_json::Value;

/// One claim checked against the algebraic oracle.
#[derive(Debug, Clone, Serialize)]
pub struct Claim {
    pub claim: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Crosscheck {
    pub passed: bool,
    pub claims: Vec<Claim>,
}

impl Crosscheck {
    pub fn new() -> Self {
        Crosscheck {
            passed: true,
            claims: Vec::new(),
        }
    }

    pub fn check(&mut self, claim: impl Into<String>, passed: bool, detail: Option<String>) {
        self.passed &= passed;
        self.claims.push(Claim {
            claim: claim.into(),
            passed,
            detail,
        });
    }
}

/// What a subcommand produced, before it is wrapped into a [`Report`].
pub struct Outcome {
    pub result: Value,
    pub table: String,
    pub crosscheck: Option<Crosscheck>,
    /// The analysis answered "no" (unobservable, not stealthy, nothing found).
    pub negative: bool,
}

impl Outcome {
    pub fn positive(result: Value, table: String) -> Self {
        Outcome {
            result,
            table,
            crosscheck: None,
            negative: false,
        }
    }

    pub fn negative(result: Value, table: String) -> Self {
        Outcome {
            negative: true,
            ..Outcome::positive(result, table)
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub case_digest: String,
    pub result: Value,
    pub oracle_crosscheck: Option<Crosscheck>,
    pub generated_at: String,
}
