//! Plan validation with failure classification.
//!
//! A plan is simulated from the initial state and the first failing step is
//! reported. Per step the checks run in a fixed order: unknown action name,
//! argument count, unknown objects, then preconditions. Parameter type
//! mismatches are reported as failed static literals of the form
//! `(type obj)`, since types never change during a task.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pddl::{apply_unchecked, instantiate, DomainModel, GroundAction, GroundAtom, GroundLiteral, Plan, Task};

/// Predicates that appear in no action's add or delete effects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticPredicateSet {
    pub names: BTreeSet<String>,
}

impl StaticPredicateSet {
    pub fn contains(&self, predicate: &str) -> bool {
        self.names.contains(predicate)
    }
}

pub fn compute_static_predicates(domain: &DomainModel) -> StaticPredicateSet {
    let changed: BTreeSet<&str> = domain
        .actions
        .iter()
        .flat_map(|a| a.add_effects.iter().chain(&a.del_effects))
        .map(|atom| atom.predicate.as_str())
        .collect();
    StaticPredicateSet {
        names: domain
            .predicates
            .iter()
            .filter(|p| !changed.contains(p.name.as_str()))
            .map(|p| p.name.clone())
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ValidationOutcome {
    Valid,
    UnknownObject {
        step_index: usize,
        token: String,
        action_text: String,
    },
    UnknownAction {
        step_index: usize,
        name: String,
        action_text: String,
    },
    ArityMismatch {
        step_index: usize,
        name: String,
        expected_count: usize,
        given_count: usize,
        action_text: String,
    },
    UnsatDynamicPrecondition {
        step_index: usize,
        action_text: String,
        failed_literals: Vec<GroundLiteral>,
    },
    UnsatStaticPrecondition {
        step_index: usize,
        action_text: String,
        failed_literals: Vec<GroundLiteral>,
    },
    GoalNotReached {
        unsat_positive_goals: Vec<GroundAtom>,
        unsat_negative_goals: Vec<GroundAtom>,
    },
}

impl ValidationOutcome {
    pub fn is_valid(&self) -> bool {
        matches!(self, ValidationOutcome::Valid)
    }

    /// 1-based index of the failing step, if the failure is tied to a step.
    pub fn step_index(&self) -> Option<usize> {
        match self {
            ValidationOutcome::Valid | ValidationOutcome::GoalNotReached { .. } => None,
            ValidationOutcome::UnknownObject { step_index, .. }
            | ValidationOutcome::UnknownAction { step_index, .. }
            | ValidationOutcome::ArityMismatch { step_index, .. }
            | ValidationOutcome::UnsatDynamicPrecondition { step_index, .. }
            | ValidationOutcome::UnsatStaticPrecondition { step_index, .. } => Some(*step_index),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ValidationOutcome::Valid => "valid",
            ValidationOutcome::UnknownObject { .. } => "unknown_object",
            ValidationOutcome::UnknownAction { .. } => "unknown_action",
            ValidationOutcome::ArityMismatch { .. } => "arity_mismatch",
            ValidationOutcome::UnsatDynamicPrecondition { .. } => "unsat_dynamic_precondition",
            ValidationOutcome::UnsatStaticPrecondition { .. } => "unsat_static_precondition",
            ValidationOutcome::GoalNotReached { .. } => "goal_not_reached",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: empty action name")]
pub struct StepError {
    pub line: usize,
}

/// Parse one plan step, either `(name a b)` or `name a b`.
/// Returns `None` when the step has no action name.
pub fn parse_plan_step(text: &str) -> Option<GroundAction> {
    let mut s = text.trim();
    if let Some(rest) = s.strip_prefix('(') {
        s = rest.strip_suffix(')').unwrap_or(rest);
    }
    let mut tokens = s.split_whitespace();
    let name = tokens.next()?;
    Some(GroundAction::new(name, tokens))
}

/// One step per item, without skipping anything. Items that name no action
/// are kept as nameless steps so the validator reports them.
pub fn plan_from_lines<'a>(lines: impl IntoIterator<Item = &'a str>) -> Plan {
    Plan::new(
        lines
            .into_iter()
            .map(|l| parse_plan_step(l).unwrap_or_else(|| GroundAction::new(l.trim(), Vec::<String>::new())))
            .collect(),
    )
}

/// One action per non-empty line. Lines starting with `;` are comments.
pub fn parse_plan_text(text: &str) -> Result<Plan, StepError> {
    let mut steps = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = match line.find(';') {
            Some(c) => &line[..c],
            None => line,
        };
        if line.trim().is_empty() {
            continue;
        }
        steps.push(parse_plan_step(line).ok_or(StepError { line: i + 1 })?);
    }
    Ok(Plan::new(steps))
}

/// Simulate `plan` from the initial state and classify the first failure.
pub fn validate_plan(task: &Task, plan: &Plan) -> ValidationOutcome {
    let statics = compute_static_predicates(&task.domain);
    let mut state = task.initial_state();

    for (i, raw) in plan.steps.iter().enumerate() {
        let step_index = i + 1;
        let action_text = raw.to_string();
        let action = raw.normalized();

        let Some(schema) = task.domain.action(&action.schema) else {
            return ValidationOutcome::UnknownAction {
                step_index,
                name: raw.schema.clone(),
                action_text,
            };
        };
        if schema.params.len() != action.args.len() {
            return ValidationOutcome::ArityMismatch {
                step_index,
                name: raw.schema.clone(),
                expected_count: schema.params.len(),
                given_count: action.args.len(),
                action_text,
            };
        }
        if let Some(pos) = action.args.iter().position(|a| task.object_type(a).is_none()) {
            return ValidationOutcome::UnknownObject {
                step_index,
                token: raw.args[pos].clone(),
                action_text,
            };
        }

        let mut static_failed = Vec::new();
        let mut dynamic_failed = Vec::new();
        for (param, arg) in schema.params.iter().zip(&action.args) {
            let ty = task.object_type(arg).unwrap_or_default();
            if !task.domain.is_subtype(ty, &param.ty) {
                static_failed.push(GroundLiteral::pos(GroundAtom::new(param.ty.clone(), [arg.clone()])));
            }
        }
        let binding = schema.binding(&action.args);
        for lit in &schema.precondition {
            let ground = GroundLiteral {
                atom: instantiate(&lit.atom, &binding),
                positive: lit.positive,
            };
            if state.holds(&ground) {
                continue;
            }
            let bucket = if statics.contains(&ground.atom.predicate) {
                &mut static_failed
            } else {
                &mut dynamic_failed
            };
            if !bucket.contains(&ground) {
                bucket.push(ground);
            }
        }
        if !static_failed.is_empty() {
            return ValidationOutcome::UnsatStaticPrecondition {
                step_index,
                action_text,
                failed_literals: static_failed,
            };
        }
        if !dynamic_failed.is_empty() {
            return ValidationOutcome::UnsatDynamicPrecondition {
                step_index,
                action_text,
                failed_literals: dynamic_failed,
            };
        }
        state = apply_unchecked(&state, &action, &task.domain);
    }

    let mut unsat_positive_goals = Vec::new();
    let mut unsat_negative_goals = Vec::new();
    for lit in &task.problem.goal {
        if !state.holds(lit) {
            if lit.positive {
                unsat_positive_goals.push(lit.atom.clone());
            } else {
                unsat_negative_goals.push(lit.atom.clone());
            }
        }
    }
    if unsat_positive_goals.is_empty() && unsat_negative_goals.is_empty() {
        ValidationOutcome::Valid
    } else {
        ValidationOutcome::GoalNotReached {
            unsat_positive_goals,
            unsat_negative_goals,
        }
    }
}
