use thiserror::Error;

use crate::parser::ParseError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("predicate {pred} used with arity {found}, previously {expected}")]
    ArityMismatch {
        pred: String,
        expected: usize,
        found: usize,
    },
    #[error("expected an atomic query, got a conjunction of {0} atoms")]
    NonAtomicQuery(usize),
    #[error("not a Datalog clause (contains a compound term): {0}")]
    NonDatalog(String),
    #[error("magic predicate {0} in a program or query that must be over the original namespace")]
    MagicInInput(String),
    #[error("unknown predicate {0}")]
    UnknownPredicate(String),
    #[error("illegal selection for {pred}: {reason}")]
    IllegalSelection { pred: String, reason: String },
    #[error("illegal variant: {0}")]
    IllegalVariant(String),
    #[error("atom {0} is not in the least model")]
    NotEntailed(String),
    #[error("invalid proof tree: {0}")]
    InvalidTree(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
