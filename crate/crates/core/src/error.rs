use thiserror::Error;

use crate::model::Violation;

/// Errors raised by the library operations.
///
/// Structural problems with a QBAF document are reported as a list of
/// [`Violation`]s rather than one failure per call.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QbafError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid QBAF: {}", format_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("gradients defined only for acyclic EW-QBAFs")]
    Cyclic,

    #[error("unknown argument `{0}`")]
    UnknownArgument(String),

    #[error("unknown edge ({source_id}, {target_id})")]
    UnknownEdge { source_id: String, target_id: String },

    #[error("invalid semantics configuration: {0}")]
    InvalidSpec(String),

    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = QbafError> = std::result::Result<T, E>;
