//! Program generation from pseudocode and the program debugging loop.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use genplan_core::encoding::{encode_task, permute_presentation, py_str_list, TaskEncoding};
use genplan_core::executor::{Executor, Job};
use genplan_core::feedback::{
    build_code_debug_prompt, render_program_feedback, CodeDebugMode, FailedTask, FeedbackCategory, ProgramOutcome,
    SolvedTask, CODE_REVISION_PROMPT,
};
use genplan_core::llm::{Gateway, Message};

use crate::config::PipelineConfig;
use crate::error::StageError;
use crate::extract::extract_code;
use crate::prompts;
use crate::seeds::mix;
use crate::tasks::DebugTask;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramVersion {
    /// 1-based index of the initial program this version descends from.
    pub initial_index: usize,
    pub revision: usize,
    pub source: String,
    pub solved_tasks: BTreeSet<String>,
    pub outcomes: BTreeMap<String, ProgramOutcome>,
    pub raw_completion: String,
}

impl ProgramVersion {
    pub fn lineage(&self) -> (usize, usize) {
        (self.initial_index, self.revision)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebugStep {
    pub lineage: (usize, usize),
    pub task_id: String,
    pub category: FeedbackCategory,
    pub reflection: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeRunLog {
    pub example_task: String,
    /// Presentation seed per initial program; `None` for the unpermuted one.
    pub presentation_seeds: Vec<Option<u64>>,
    pub versions: Vec<ProgramVersion>,
    pub debug_steps: Vec<DebugStep>,
    pub selected: usize,
    pub early_stopped: bool,
}

impl CodeRunLog {
    pub fn selected(&self) -> &ProgramVersion {
        &self.versions[self.selected]
    }
}

/// Example shown when asking for an initial program.
#[derive(Debug, Clone)]
pub struct CodeExample {
    pub task_id: String,
    pub encoding: TaskEncoding,
    pub plan: Vec<String>,
}

/// Position of the version with the most solved tasks; ties go to the later
/// one in generation order.
pub fn select_program(versions: &[ProgramVersion]) -> usize {
    let best = versions.iter().map(|v| v.solved_tasks.len()).max().unwrap_or(0);
    versions.iter().rposition(|v| v.solved_tasks.len() == best).unwrap_or(0)
}

fn request_code(llm: &mut Gateway, conversation: &mut Vec<Message>, label: &str) -> Result<(String, String), StageError> {
    let reply = llm.chat(label, conversation.clone())?;
    conversation.push(Message::assistant(reply.clone()));
    if let Some(code) = extract_code(&reply) {
        return Ok((code, reply));
    }
    conversation.push(Message::user(prompts::CODE_REASK));
    let reask_label = format!("{label}_reask");
    let reply = llm.chat(&reask_label, conversation.clone())?;
    conversation.push(Message::assistant(reply.clone()));
    match extract_code(&reply) {
        Some(code) => Ok((code, reply)),
        None => Err(StageError::Extraction {
            label: reask_label,
            what: "program",
        }),
    }
}

/// Ask for an initial program. Returns the version (not yet evaluated) and
/// the conversation.
pub fn gen_initial_program(
    pseudocode: &str,
    example_encoding: &TaskEncoding,
    example_plan: &[String],
    initial_index: usize,
    llm: &mut Gateway,
) -> Result<(ProgramVersion, Vec<Message>), StageError> {
    let mut conversation = vec![
        Message::system(prompts::SYSTEM),
        Message::user(prompts::code_initial(
            pseudocode,
            &example_encoding.to_python(),
            &py_str_list(example_plan),
        )),
    ];
    let (source, raw) = request_code(llm, &mut conversation, "code_initial")?;
    Ok((
        ProgramVersion {
            initial_index,
            revision: 0,
            source,
            solved_tasks: BTreeSet::new(),
            outcomes: BTreeMap::new(),
            raw_completion: raw,
        },
        conversation,
    ))
}

/// Run a program on every debugging task (declaration order).
pub fn evaluate_on_debug_tasks(
    version: &mut ProgramVersion,
    tasks: &[DebugTask],
    encodings: &[TaskEncoding],
    executor: &Executor,
    limit: Duration,
) -> Result<(), StageError> {
    let jobs: Vec<Job<'_>> = tasks
        .iter()
        .zip(encodings)
        .map(|(t, encoding)| Job {
            source: &version.source,
            encoding,
            task: &t.entry.task,
        })
        .collect();
    let results = executor.run_batch(&jobs, limit);
    version.outcomes.clear();
    version.solved_tasks.clear();
    for (t, r) in tasks.iter().zip(results) {
        let outcome = r?.outcome;
        if outcome.is_solved() {
            version.solved_tasks.insert(t.id().to_string());
        }
        version.outcomes.insert(t.id().to_string(), outcome);
    }
    Ok(())
}

fn plan_steps(outcome: &ProgramOutcome) -> Vec<String> {
    match outcome {
        ProgramOutcome::PlanProduced { plan_text, .. } => plan_text.lines().map(str::to_string).collect(),
        _ => Vec::new(),
    }
}

/// Generate and debug up to `n` programs; `tasks` sorted by id.
pub fn run_code_stage(
    config: &PipelineConfig,
    pseudocode: &str,
    example: &CodeExample,
    tasks: &[DebugTask],
    llm: &mut Gateway,
    executor: &Executor,
) -> Result<CodeRunLog, StageError> {
    let limit = Duration::from_secs_f64(config.time_limit_secs);
    let encodings: Vec<TaskEncoding> = tasks.iter().map(|t| encode_task(&t.entry.task.problem, 0)).collect();
    let mut log = CodeRunLog {
        example_task: example.task_id.clone(),
        presentation_seeds: Vec::new(),
        versions: Vec::new(),
        debug_steps: Vec::new(),
        selected: 0,
        early_stopped: false,
    };

    'programs: for i in 1..=config.n {
        let seed = (i > 1).then(|| mix(config.rng_seed, &format!("presentation-{i}")));
        log.presentation_seeds.push(seed);
        let shown = match seed {
            Some(s) => permute_presentation(&example.encoding, s),
            None => example.encoding.clone(),
        };
        let (mut version, mut conversation) = gen_initial_program(pseudocode, &shown, &example.plan, i, llm)?;
        evaluate_on_debug_tasks(&mut version, tasks, &encodings, executor, limit)?;

        loop {
            let all_solved = version.solved_tasks.len() == tasks.len();
            let revision = version.revision;
            let previous = version.clone();
            log.versions.push(version);
            if all_solved {
                log.early_stopped = true;
                break 'programs;
            }
            if revision >= config.k_c {
                break;
            }

            let f = tasks
                .iter()
                .position(|t| !previous.solved_tasks.contains(t.id()))
                .expect("some task is unsolved");
            let failed_outcome = &previous.outcomes[tasks[f].id()];
            let feedback = render_program_feedback(failed_outcome).expect("unsolved task has feedback");
            let solved_steps: Vec<(usize, Vec<String>)> = tasks
                .iter()
                .enumerate()
                .filter(|(_, t)| previous.solved_tasks.contains(t.id()))
                .map(|(k, t)| (k, plan_steps(&previous.outcomes[t.id()])))
                .collect();
            let solved: Vec<SolvedTask<'_>> = solved_steps
                .iter()
                .map(|(k, steps)| SolvedTask {
                    encoding: &encodings[*k],
                    plan_steps: steps,
                })
                .collect();
            let failed = FailedTask::new(&encodings[f], &feedback, failed_outcome);

            let mut reflection = None;
            if config.reflection_enabled {
                conversation.push(Message::user(build_code_debug_prompt(&solved, &failed, CodeDebugMode::Reflect)));
                let r = llm.chat("code_reflection", conversation.clone())?;
                conversation.push(Message::assistant(r.clone()));
                conversation.push(Message::user(CODE_REVISION_PROMPT));
                reflection = Some(r);
            } else {
                conversation.push(Message::user(build_code_debug_prompt(
                    &solved,
                    &failed,
                    CodeDebugMode::DirectRevision,
                )));
            }
            log.debug_steps.push(DebugStep {
                lineage: previous.lineage(),
                task_id: tasks[f].id().to_string(),
                category: feedback.category,
                reflection,
            });
            let (source, raw) = request_code(llm, &mut conversation, "code_revision")?;
            version = ProgramVersion {
                initial_index: i,
                revision: revision + 1,
                source,
                solved_tasks: BTreeSet::new(),
                outcomes: BTreeMap::new(),
                raw_completion: raw,
            };
            evaluate_on_debug_tasks(&mut version, tasks, &encodings, executor, limit)?;
        }
    }

    log.selected = select_program(&log.versions);
    Ok(log)
}
