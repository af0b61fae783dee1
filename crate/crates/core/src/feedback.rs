//! Feedback messages for failed programs and plans, and the reflection
//! prompts built from them.
//!
//! Message wording lives in `templates/`; this module only fills the
//! `{{NAME}}` placeholders.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::{py_str_list, TaskEncoding};
use crate::pddl::{GroundAtom, GroundLiteral, Plan};
use crate::validator::{plan_from_lines, ValidationOutcome};

macro_rules! template {
    ($path:literal) => {
        strip_final_newline(include_str!(concat!("../templates/", $path)))
    };
}

pub const fn strip_final_newline(s: &'static str) -> &'static str {
    match s.as_bytes() {
        [rest @ .., b'\n'] => match std::str::from_utf8(rest) {
            Ok(t) => t,
            Err(_) => s,
        },
        _ => s,
    }
}

const ROW_1: &str = template!("feedback/row_1.txt");
const ROW_2: &str = template!("feedback/row_2.txt");
const ROW_3: &str = template!("feedback/row_3.txt");
const ROW_4_1: &str = template!("feedback/row_4_1.txt");
const ROW_4_2: &str = template!("feedback/row_4_2.txt");
const ROW_4_3: &str = template!("feedback/row_4_3.txt");
const ROW_4_4: &str = template!("feedback/row_4_4.txt");
const ROW_4_5: &str = template!("feedback/row_4_5.txt");
const ROW_4_6: &str = template!("feedback/row_4_6.txt");
const PRECONDITION_BULLET: &str = template!("feedback/precondition_bullet.txt");
const GOAL_NEGATIVE: &str = template!("feedback/goal_negative.txt");
const GOAL_POSITIVE: &str = template!("feedback/goal_positive.txt");
const WITH_PLAN: &str = template!("feedback/with_plan.txt");

const STRATEGY_REFLECTION: &str = template!("prompts/strategy_reflection.txt");
pub const STRATEGY_REVISION_PROMPT: &str = template!("prompts/strategy_revision.txt");
const CODE_SOME_SOLVED: &str = template!("prompts/code_some_solved.txt");
const CODE_NONE_SOLVED: &str = template!("prompts/code_none_solved.txt");
const CODE_SOLVED_TASK: &str = template!("prompts/code_solved_task.txt");
const CODE_OUTPUT_BLOCK: &str = template!("prompts/code_output_block.txt");
const CODE_REFLECTION: &str = template!("prompts/code_reflection.txt");
pub const CODE_REVISION_PROMPT: &str = template!("prompts/code_revision.txt");
const CODE_DIRECT_REVISION: &str = template!("prompts/code_direct_revision.txt");

/// Substitute `{{NAME}}` placeholders in one pass, so substituted values are
/// never re-scanned. Panics on a placeholder without a value.
pub fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        let Some(len) = rest[start + 2..].find("}}") else {
            break;
        };
        let name = &rest[start + 2..start + 2 + len];
        let value = vars
            .iter()
            .find(|(k, _)| *k == name)
            .unwrap_or_else(|| panic!("no value for placeholder {{{{{name}}}}}"))
            .1;
        out.push_str(&rest[..start]);
        out.push_str(value);
        rest = &rest[start + 2 + len + 2..];
    }
    out.push_str(rest);
    out
}

/// Result of running a generated program on one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ProgramOutcome {
    Timeout { limit_seconds: f64 },
    RuntimeException { traceback: String },
    WrongOutputType { output_repr: String },
    PlanProduced { plan_text: String, validation: ValidationOutcome },
}

impl ProgramOutcome {
    pub fn is_solved(&self) -> bool {
        matches!(self, ProgramOutcome::PlanProduced { validation, .. } if validation.is_valid())
    }
}

/// Row of the feedback taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeedbackCategory {
    #[serde(rename = "1")]
    Timeout,
    #[serde(rename = "2")]
    Exception,
    #[serde(rename = "3")]
    WrongOutputType,
    #[serde(rename = "4.1")]
    UnknownObject,
    #[serde(rename = "4.2")]
    UnknownAction,
    #[serde(rename = "4.3")]
    ArityMismatch,
    #[serde(rename = "4.4")]
    DynamicPrecondition,
    #[serde(rename = "4.5")]
    StaticPrecondition,
    #[serde(rename = "4.6")]
    GoalNotReached,
}

impl FeedbackCategory {
    pub const ALL: [FeedbackCategory; 9] = [
        FeedbackCategory::Timeout,
        FeedbackCategory::Exception,
        FeedbackCategory::WrongOutputType,
        FeedbackCategory::UnknownObject,
        FeedbackCategory::UnknownAction,
        FeedbackCategory::ArityMismatch,
        FeedbackCategory::DynamicPrecondition,
        FeedbackCategory::StaticPrecondition,
        FeedbackCategory::GoalNotReached,
    ];

    pub fn id(self) -> &'static str {
        match self {
            FeedbackCategory::Timeout => "1",
            FeedbackCategory::Exception => "2",
            FeedbackCategory::WrongOutputType => "3",
            FeedbackCategory::UnknownObject => "4.1",
            FeedbackCategory::UnknownAction => "4.2",
            FeedbackCategory::ArityMismatch => "4.3",
            FeedbackCategory::DynamicPrecondition => "4.4",
            FeedbackCategory::StaticPrecondition => "4.5",
            FeedbackCategory::GoalNotReached => "4.6",
        }
    }

    /// Category of a validation outcome; `None` for a valid plan.
    pub fn of_validation(outcome: &ValidationOutcome) -> Option<Self> {
        Some(match outcome {
            ValidationOutcome::Valid => return None,
            ValidationOutcome::UnknownObject { .. } => FeedbackCategory::UnknownObject,
            ValidationOutcome::UnknownAction { .. } => FeedbackCategory::UnknownAction,
            ValidationOutcome::ArityMismatch { .. } => FeedbackCategory::ArityMismatch,
            ValidationOutcome::UnsatDynamicPrecondition { .. } => FeedbackCategory::DynamicPrecondition,
            ValidationOutcome::UnsatStaticPrecondition { .. } => FeedbackCategory::StaticPrecondition,
            ValidationOutcome::GoalNotReached { .. } => FeedbackCategory::GoalNotReached,
        })
    }

    /// Category of a program outcome; `None` when the produced plan is valid.
    pub fn of_program(outcome: &ProgramOutcome) -> Option<Self> {
        match outcome {
            ProgramOutcome::Timeout { .. } => Some(FeedbackCategory::Timeout),
            ProgramOutcome::RuntimeException { .. } => Some(FeedbackCategory::Exception),
            ProgramOutcome::WrongOutputType { .. } => Some(FeedbackCategory::WrongOutputType),
            ProgramOutcome::PlanProduced { validation, .. } => Self::of_validation(validation),
        }
    }
}

impl fmt::Display for FeedbackCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackMessage {
    pub text: String,
    pub category: FeedbackCategory,
}

/// `1. (a ...)` per line.
pub fn enumerate_plan(plan: &Plan) -> String {
    plan.steps
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{}. {}", i + 1, s))
        .collect::<Vec<_>>()
        .join("\n")
}

fn bullets(literals: &[GroundLiteral]) -> String {
    literals
        .iter()
        .map(|l| fill(PRECONDITION_BULLET, &[("PRECONDITION", &l.to_string())]))
        .collect::<Vec<_>>()
        .join("\n")
}

fn fact_lines(atoms: &[GroundAtom]) -> String {
    atoms.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n")
}

fn row_message(outcome: &ValidationOutcome) -> Option<String> {
    Some(match outcome {
        ValidationOutcome::Valid => return None,
        ValidationOutcome::UnknownObject {
            step_index,
            token,
            action_text,
        } => fill(
            ROW_4_1,
            &[("ACTION", action_text), ("STEP", &step_index.to_string()), ("OBJECT", token)],
        ),
        ValidationOutcome::UnknownAction {
            step_index,
            name,
            action_text,
        } => fill(
            ROW_4_2,
            &[("ACTION", action_text), ("STEP", &step_index.to_string()), ("ACTION_NAME", name)],
        ),
        ValidationOutcome::ArityMismatch {
            step_index,
            name,
            expected_count,
            given_count,
            action_text,
        } => fill(
            ROW_4_3,
            &[
                ("ACTION", action_text),
                ("STEP", &step_index.to_string()),
                ("ACTION_NAME", name),
                ("EXPECTED", &expected_count.to_string()),
                ("GIVEN", &given_count.to_string()),
            ],
        ),
        ValidationOutcome::UnsatDynamicPrecondition {
            step_index,
            action_text,
            failed_literals,
        } => fill(
            ROW_4_4,
            &[
                ("ACTION", action_text),
                ("STEP", &step_index.to_string()),
                ("FAILED_PRECONDITIONS", &bullets(failed_literals)),
            ],
        ),
        ValidationOutcome::UnsatStaticPrecondition {
            step_index,
            action_text,
            failed_literals,
        } => fill(
            ROW_4_5,
            &[
                ("ACTION", action_text),
                ("STEP", &step_index.to_string()),
                ("FAILED_PRECONDITIONS", &bullets(failed_literals)),
            ],
        ),
        ValidationOutcome::GoalNotReached {
            unsat_positive_goals,
            unsat_negative_goals,
        } => {
            let mut sections = Vec::new();
            if !unsat_negative_goals.is_empty() {
                sections.push(fill(GOAL_NEGATIVE, &[("FACTS", &fact_lines(unsat_negative_goals))]));
            }
            if !unsat_positive_goals.is_empty() {
                sections.push(fill(GOAL_POSITIVE, &[("FACTS", &fact_lines(unsat_positive_goals))]));
            }
            fill(ROW_4_6, &[("GOAL_SECTIONS", &sections.join("\n"))])
        }
    })
}

/// Feedback for a plan-level outcome, with the plan enumerated below the
/// message. `None` for a valid plan.
pub fn render_validation_feedback(outcome: &ValidationOutcome, plan: &Plan) -> Option<FeedbackMessage> {
    let category = FeedbackCategory::of_validation(outcome)?;
    let message = row_message(outcome)?;
    let listing = if plan.is_empty() { "(empty plan)".to_string() } else { enumerate_plan(plan) };
    Some(FeedbackMessage {
        text: fill(WITH_PLAN, &[("MESSAGE", &message), ("ENUMERATED_PLAN", &listing)]),
        category,
    })
}

/// Feedback for a program outcome. `None` when the program produced a valid plan.
pub fn render_program_feedback(outcome: &ProgramOutcome) -> Option<FeedbackMessage> {
    let (text, category) = match outcome {
        ProgramOutcome::Timeout { limit_seconds } => (
            fill(ROW_1, &[("TIME_LIMIT", &limit_seconds.to_string())]),
            FeedbackCategory::Timeout,
        ),
        ProgramOutcome::RuntimeException { traceback } => {
            (fill(ROW_2, &[("TRACEBACK", traceback)]), FeedbackCategory::Exception)
        }
        ProgramOutcome::WrongOutputType { output_repr } => {
            (fill(ROW_3, &[("OUTPUT", output_repr)]), FeedbackCategory::WrongOutputType)
        }
        ProgramOutcome::PlanProduced { plan_text, validation } => {
            let plan = plan_from_lines(plan_text.lines());
            return render_validation_feedback(validation, &plan);
        }
    };
    Some(FeedbackMessage { text, category })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("feedback text is empty")]
    EmptyFeedback,
}

/// Reflection prompt for a failed plan in the strategy debugging loop. The
/// feedback already enumerates the generated plan.
pub fn build_strategy_debug_prompt(feedback: &FeedbackMessage) -> Result<String, PromptError> {
    if feedback.text.trim().is_empty() {
        return Err(PromptError::EmptyFeedback);
    }
    Ok(fill(STRATEGY_REFLECTION, &[("FEEDBACK", &feedback.text)]))
}

/// A debugging task the program solved, with the plan it returned.
#[derive(Debug, Clone)]
pub struct SolvedTask<'a> {
    pub encoding: &'a TaskEncoding,
    pub plan_steps: &'a [String],
}

#[derive(Debug, Clone)]
pub struct FailedTask<'a> {
    pub encoding: &'a TaskEncoding,
    pub feedback: &'a FeedbackMessage,
    /// What the program returned, if it returned at all.
    pub output: Option<String>,
}

impl<'a> FailedTask<'a> {
    /// Derive the output block contents from the program outcome.
    pub fn new(encoding: &'a TaskEncoding, feedback: &'a FeedbackMessage, outcome: &ProgramOutcome) -> Self {
        let output = match outcome {
            ProgramOutcome::Timeout { .. } | ProgramOutcome::RuntimeException { .. } => None,
            ProgramOutcome::WrongOutputType { output_repr } => Some(output_repr.clone()),
            ProgramOutcome::PlanProduced { plan_text, .. } => {
                let steps: Vec<String> = plan_text.lines().map(str::to_string).collect();
                Some(py_str_list(&steps))
            }
        };
        FailedTask {
            encoding,
            feedback,
            output,
        }
    }
}

/// Whether the model is asked to reflect first or to fix the code directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeDebugMode {
    Reflect,
    DirectRevision,
}

pub fn build_code_debug_prompt(solved: &[SolvedTask<'_>], failed: &FailedTask<'_>, mode: CodeDebugMode) -> String {
    let output_block = match &failed.output {
        Some(out) => fill(CODE_OUTPUT_BLOCK, &[("OUTPUT", out)]),
        None => String::new(),
    };
    let instructions = match mode {
        CodeDebugMode::Reflect => CODE_REFLECTION,
        CodeDebugMode::DirectRevision => CODE_DIRECT_REVISION,
    };
    let failed_task = failed.encoding.to_python();
    let mut vars = vec![
        ("FAILED_TASK", failed_task.as_str()),
        ("OUTPUT_BLOCK", output_block.as_str()),
        ("FEEDBACK", failed.feedback.text.as_str()),
        ("INSTRUCTIONS", instructions),
    ];
    if solved.is_empty() {
        return fill(CODE_NONE_SOLVED, &vars);
    }
    let solved_text = solved
        .iter()
        .map(|s| {
            fill(
                CODE_SOLVED_TASK,
                &[("TASK", &s.encoding.to_python()), ("OUTPUT", &py_str_list(s.plan_steps))],
            )
        })
        .collect::<Vec<_>>()
        .join("\n\n");
    vars.push(("SOLVED_TASKS", &solved_text));
    fill(CODE_SOME_SOLVED, &vars)
}
