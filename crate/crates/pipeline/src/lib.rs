//! Generalized-plan synthesis pipeline: natural-language descriptions,
//! pseudocode generation and debugging, program generation and debugging,
//! and evaluation.

pub mod code;
pub mod config;
pub mod error;
pub mod extract;
pub mod harness;
pub mod nl;
pub mod prompts;
pub mod seeds;
pub mod strategy;
pub mod tasks;

pub use config::{ContextMode, PipelineConfig};
pub use error::StageError;
