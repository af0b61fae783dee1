//! Typed STRIPS with negative preconditions and goals: models, parsers,
//! pretty-printer and ground-action semantics.

mod model;
mod parse;
mod print;
mod semantics;
pub mod sexpr;

pub use model::*;
pub use parse::{parse_domain, parse_problem};
pub use print::{print_domain, print_problem};
pub use semantics::{apply, goal_satisfied, instantiated_precondition, is_applicable, State, Task};

pub(crate) use semantics::apply_unchecked;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PddlError {
    #[error("{line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: unsupported construct '{construct}'")]
    Unsupported {
        construct: String,
        line: usize,
        column: usize,
    },
    #[error("{0}")]
    Validation(String),
    #[error("unknown action schema '{0}'")]
    UnknownSchema(String),
    #[error("action '{schema}' takes {expected} arguments but {given} were given")]
    ArityMismatch {
        schema: String,
        expected: usize,
        given: usize,
    },
    #[error("action {0} is not applicable")]
    InapplicableAction(String),
}

impl PddlError {
    pub(crate) fn parse(pos: sexpr::Pos, message: impl Into<String>) -> Self {
        PddlError::Parse {
            line: pos.line,
            column: pos.column,
            message: message.into(),
        }
    }

    pub(crate) fn validation_at(pos: sexpr::Pos, message: impl Into<String>) -> Self {
        PddlError::Validation(format!("{}:{}: {}", pos.line, pos.column, message.into()))
    }
}
