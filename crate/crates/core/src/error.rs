use std::fmt;

use thiserror::Error;

use crate::ids::{AggregateId, VersionNumber};
use crate::merge::MergeError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors surfaced by the store, units of work and functionalities.
///
/// Every variant maps to a stable upper-case code (see [`Error::code`]) which
/// is what scenario files match against.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("aggregate {0} not found")]
    NotFound(AggregateId),
    #[error("{0} not found")]
    EntityNotFound(String),
    #[error("aggregate {0} is deleted")]
    Deleted(AggregateId),
    #[error("no causally admissible version of aggregate {0}")]
    CausalInconsistency(AggregateId),
    #[error("working copy of aggregate {0} does not belong to this unit of work")]
    ForeignCopy(AggregateId),
    #[error("aggregate {aggregate} breaks intra-invariants {}", .invariants.join(","))]
    InvariantBreak {
        aggregate: AggregateId,
        invariants: Vec<&'static str>,
    },
    #[error("cannot merge aggregate {aggregate}: {reason}")]
    AggregateMergeFailure { aggregate: AggregateId, reason: MergeError },
    #[error("version underflow: {current} {delta:+}")]
    Underflow { current: VersionNumber, delta: i64 },
    #[error("version adjustment is only available in simulation mode")]
    AdjustDisabled,
    #[error("illegal state: {0}")]
    State(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown functionality `{0}`")]
    UnknownFunctionality(String),
}

impl Error {
    pub fn code(&self) -> ErrorCode {
        match self {
            Error::NotFound(_) | Error::EntityNotFound(_) => ErrorCode::NotFound,
            Error::Deleted(_) => ErrorCode::Deleted,
            Error::CausalInconsistency(_) => ErrorCode::CausalInconsistency,
            Error::ForeignCopy(_) => ErrorCode::ForeignCopy,
            Error::InvariantBreak { .. } => ErrorCode::InvariantBreak,
            Error::AggregateMergeFailure { .. } => ErrorCode::AggregateMergeFailure,
            Error::Underflow { .. } => ErrorCode::Underflow,
            Error::AdjustDisabled => ErrorCode::AdjustDisabled,
            Error::State(_) => ErrorCode::State,
            Error::InvalidArgument(_) | Error::UnknownFunctionality(_) => ErrorCode::InvalidArgument,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCode {
    NotFound,
    Deleted,
    CausalInconsistency,
    ForeignCopy,
    InvariantBreak,
    AggregateMergeFailure,
    Underflow,
    AdjustDisabled,
    State,
    InvalidArgument,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 10] = [
        ErrorCode::NotFound,
        ErrorCode::Deleted,
        ErrorCode::CausalInconsistency,
        ErrorCode::ForeignCopy,
        ErrorCode::InvariantBreak,
        ErrorCode::AggregateMergeFailure,
        ErrorCode::Underflow,
        ErrorCode::AdjustDisabled,
        ErrorCode::State,
        ErrorCode::InvalidArgument,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::NotFound => "NOT_FOUND",
            ErrorCode::Deleted => "DELETED",
            ErrorCode::CausalInconsistency => "CAUSAL_INCONSISTENCY",
            ErrorCode::ForeignCopy => "FOREIGN_COPY",
            ErrorCode::InvariantBreak => "INVARIANT_BREAK",
            ErrorCode::AggregateMergeFailure => "AGGREGATE_MERGE_FAILURE",
            ErrorCode::Underflow => "UNDERFLOW",
            ErrorCode::AdjustDisabled => "ADJUST_DISABLED",
            ErrorCode::State => "STATE",
            ErrorCode::InvalidArgument => "INVALID_ARGUMENT",
        }
    }

    pub fn parse(s: &str) -> Option<ErrorCode> {
        ErrorCode::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
