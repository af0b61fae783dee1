use thiserror::Error;

use genplan_core::executor::ExecutorError;
use genplan_core::llm::LlmError;
use genplan_core::pddl::PddlError;

#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("no {what} found in the reply to `{label}`, even after asking again")]
    Extraction { label: String, what: &'static str },
    #[error(transparent)]
    Executor(#[from] ExecutorError),
    #[error(transparent)]
    Pddl(#[from] PddlError),
    #[error("precondition violated: {0}")]
    Precondition(String),
}
