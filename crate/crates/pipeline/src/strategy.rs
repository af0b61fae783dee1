//! Pseudocode generation and the plan-based debugging loop.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use genplan_core::feedback::{
    build_strategy_debug_prompt, render_validation_feedback, FeedbackMessage, STRATEGY_REVISION_PROMPT,
};
use genplan_core::llm::{Gateway, Message};
use genplan_core::pddl::DomainModel;
use genplan_core::validator::{plan_from_lines, validate_plan, ValidationOutcome};

use crate::config::{ContextMode, PipelineConfig};
use crate::error::StageError;
use crate::extract::{extract_plan, extract_pseudocode};
use crate::prompts;
use crate::tasks::DebugTask;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudocodeVersion {
    pub index: usize,
    pub text: String,
    pub solved_tasks: BTreeSet<String>,
    pub raw_completion: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanAttempt {
    pub task_id: String,
    /// `None` when no plan could be extracted from the reply.
    pub plan: Option<Vec<String>>,
    pub outcome: Option<ValidationOutcome>,
}

impl PlanAttempt {
    pub fn is_solved(&self) -> bool {
        self.outcome.as_ref().is_some_and(ValidationOutcome::is_valid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyIteration {
    pub version_index: usize,
    pub attempts: Vec<PlanAttempt>,
    /// Task and message that drove the next revision, if one followed.
    pub feedback: Option<(String, FeedbackMessage)>,
    pub reflection: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyRunLog {
    pub versions: Vec<PseudocodeVersion>,
    pub iterations: Vec<StrategyIteration>,
    pub selected_index: usize,
}

impl StrategyRunLog {
    pub fn selected(&self) -> &PseudocodeVersion {
        &self.versions[self.selected_index]
    }

    /// A valid plan produced during validation: from the selected version if
    /// possible (lowest task id), else the earliest one.
    pub fn example_plan(&self) -> Option<(String, Vec<String>)> {
        let valid = |it: &StrategyIteration| {
            it.attempts
                .iter()
                .filter(|a| a.is_solved())
                .min_by(|a, b| a.task_id.cmp(&b.task_id))
                .map(|a| (a.task_id.clone(), a.plan.clone().unwrap_or_default()))
        };
        self.iterations
            .iter()
            .filter(|it| it.version_index == self.selected_index)
            .find_map(valid)
            .or_else(|| self.iterations.iter().find_map(valid))
    }
}

/// Index with the most solved tasks; ties go to the later index.
pub fn select_version(solved_counts: &[usize]) -> usize {
    let best = solved_counts.iter().copied().max().unwrap_or(0);
    solved_counts.iter().rposition(|&c| c == best).unwrap_or(0)
}

/// One line per action schema, e.g. `(pick ?b - ball ?r - room)`.
pub fn action_catalog(domain: &DomainModel) -> String {
    domain.actions.iter().map(|a| a.signature()).collect::<Vec<_>>().join("\n")
}

fn chat_with_reask(
    llm: &mut Gateway,
    conversation: &mut Vec<Message>,
    label: &str,
    reask: &str,
    what: &'static str,
    extract: impl Fn(&str) -> Option<String>,
) -> Result<(String, String), StageError> {
    let reply = llm.chat(label, conversation.clone())?;
    conversation.push(Message::assistant(reply.clone()));
    if let Some(x) = extract(&reply) {
        return Ok((x, reply));
    }
    conversation.push(Message::user(reask));
    let reask_label = format!("{label}_reask");
    let reply = llm.chat(&reask_label, conversation.clone())?;
    conversation.push(Message::assistant(reply.clone()));
    extract(&reply).map(|x| (x, reply)).ok_or(StageError::Extraction {
        label: reask_label,
        what,
    })
}

/// Version 0 of the pseudocode, and the conversation that produced it.
pub fn gen_pseudocode(
    domain_nl: &str,
    example_task_nls: [&str; 2],
    llm: &mut Gateway,
) -> Result<(PseudocodeVersion, Vec<Message>), StageError> {
    let mut conversation = vec![
        Message::system(prompts::SYSTEM),
        Message::user(prompts::pseudocode(domain_nl, example_task_nls[0], example_task_nls[1])),
    ];
    let (text, raw) = chat_with_reask(
        llm,
        &mut conversation,
        "pseudocode",
        prompts::PSEUDOCODE_REASK,
        "pseudocode",
        extract_pseudocode,
    )?;
    let version = PseudocodeVersion {
        index: 0,
        text,
        solved_tasks: BTreeSet::new(),
        raw_completion: raw,
    };
    Ok((version, conversation))
}

/// Plan steps for one task following the pseudocode, with the conversation.
pub fn gen_plan_from_pseudocode(
    domain_nl: &str,
    task_nl: &str,
    pseudocode: &str,
    catalog: &str,
    llm: &mut Gateway,
) -> Result<(Vec<String>, Vec<Message>), StageError> {
    if pseudocode.trim().is_empty() {
        return Err(StageError::Precondition("empty pseudocode".into()));
    }
    let mut conversation = vec![
        Message::system(prompts::SYSTEM),
        Message::user(prompts::plan(domain_nl, task_nl, pseudocode, catalog)),
    ];
    let (steps, _) = chat_with_reask(llm, &mut conversation, "plan", prompts::PLAN_REASK, "plan", |r| {
        extract_plan(r).map(|s| s.join("\n"))
    })?;
    Ok((steps.lines().map(str::to_string).collect(), conversation))
}

/// Generate, validate and refine pseudocode; `tasks` sorted by id.
pub fn run_strategy_stage(
    config: &PipelineConfig,
    domain_nl: &str,
    example_task_nls: [&str; 2],
    tasks: &[DebugTask],
    llm: &mut Gateway,
) -> Result<StrategyRunLog, StageError> {
    let (v0, _) = gen_pseudocode(domain_nl, example_task_nls, llm)?;
    let mut versions = vec![v0];
    let mut iterations = Vec::new();
    let catalog = tasks
        .first()
        .map(|t| action_catalog(&t.entry.task.domain))
        .unwrap_or_default();
    let mut rolling: Option<Vec<Message>> = None;

    while config.k_s > 0 {
        let current = versions.len() - 1;
        let pseudocode = versions[current].text.clone();
        let mut attempts = Vec::new();
        let mut conversations = Vec::new();
        for t in tasks {
            match gen_plan_from_pseudocode(domain_nl, &t.nl, &pseudocode, &catalog, llm) {
                Ok((steps, conv)) => {
                    let outcome = validate_plan(&t.entry.task, &plan_from_lines(steps.iter().map(String::as_str)));
                    attempts.push(PlanAttempt {
                        task_id: t.id().to_string(),
                        plan: Some(steps),
                        outcome: Some(outcome),
                    });
                    conversations.push(Some(conv));
                }
                Err(StageError::Extraction { .. }) => {
                    attempts.push(PlanAttempt {
                        task_id: t.id().to_string(),
                        plan: None,
                        outcome: None,
                    });
                    conversations.push(None);
                }
                Err(e) => return Err(e),
            }
        }
        versions[current].solved_tasks = attempts.iter().filter(|a| a.is_solved()).map(|a| a.task_id.clone()).collect();
        let all_solved = versions[current].solved_tasks.len() == tasks.len();
        let mut iteration = StrategyIteration {
            version_index: current,
            attempts,
            feedback: None,
            reflection: None,
        };

        // Lowest-id failure that has a real validation outcome to report.
        let failed = iteration
            .attempts
            .iter()
            .position(|a| !a.is_solved() && a.outcome.is_some());
        let Some(f) = failed.filter(|_| !all_solved && current < config.k_s) else {
            iterations.push(iteration);
            break;
        };
        let attempt = &iteration.attempts[f];
        let plan = plan_from_lines(attempt.plan.as_deref().unwrap_or_default().iter().map(String::as_str));
        let feedback = render_validation_feedback(attempt.outcome.as_ref().expect("failure has an outcome"), &plan)
            .expect("failed plan has feedback");
        let plan_conv = conversations[f].take().expect("plan conversation");
        let mut conversation = match (config.context, rolling.take()) {
            (ContextMode::Rolling, Some(mut conv)) => {
                conv.extend(plan_conv.into_iter().skip(1));
                conv
            }
            _ => plan_conv,
        };
        conversation.push(Message::user(
            build_strategy_debug_prompt(&feedback).map_err(|e| StageError::Precondition(e.to_string()))?,
        ));
        let reflection = llm.chat("strategy_reflection", conversation.clone())?;
        conversation.push(Message::assistant(reflection.clone()));
        conversation.push(Message::user(STRATEGY_REVISION_PROMPT));
        let (text, raw) = chat_with_reask(
            llm,
            &mut conversation,
            "strategy_revision",
            prompts::PSEUDOCODE_REASK,
            "pseudocode",
            extract_pseudocode,
        )?;
        iteration.feedback = Some((attempt.task_id.clone(), feedback));
        iteration.reflection = Some(reflection);
        iterations.push(iteration);
        versions.push(PseudocodeVersion {
            index: current + 1,
            text,
            solved_tasks: BTreeSet::new(),
            raw_completion: raw,
        });
        rolling = Some(conversation);
    }

    let counts: Vec<usize> = versions.iter().map(|v| v.solved_tasks.len()).collect();
    Ok(StrategyRunLog {
        selected_index: select_version(&counts),
        versions,
        iterations,
    })
}
