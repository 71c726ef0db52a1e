use thiserror::Error;

use crate::model::{LineId, MeasurementId, ValidationReport};

/// Failure to turn input bytes into a [`Case`](crate::Case).
#[derive(Debug, Error)]
pub enum ParseError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("validation error: {0}")]
    Validation(ValidationReport),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CriticalSetError {
    #[error("measurement {0} is not in the case")]
    UnknownMeasurement(MeasurementId),
    #[error("measurement {0} is not assigned in the spanning-tree certificate")]
    NotInTree(MeasurementId),
    #[error("measurement {0} is not an assigned boundary injection of this split")]
    NotApplicable(MeasurementId),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SecurityError {
    #[error("measurement {0} is not in the case")]
    UnknownMeasurement(MeasurementId),
    #[error("no critical set contains measurement {0}")]
    NoCoveringSet(MeasurementId),
    #[error("threshold must be at least 2, got {0}")]
    InvalidThreshold(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("line {0} has no susceptance")]
    MissingSusceptance(LineId),
    #[error("measurement {0} is not a row of the Jacobian")]
    UnknownMeasurement(MeasurementId),
    #[error("search cardinality {requested} exceeds budget {budget}")]
    BudgetExceeded { requested: usize, budget: usize },
    #[error("normal matrix is singular; the measurement set is not observable")]
    SingularNormalMatrix,
    #[error("noise model does not match the Jacobian: {0}")]
    BadNoiseModel(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchingError {
    #[error("edge references unknown {side} node")]
    UnknownNode { side: &'static str },
}
