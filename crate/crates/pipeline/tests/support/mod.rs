//! Scripted model for driving the pipeline on the bundled gripper tasks.
//!
//! Every pseudocode version and every program revision is told how many of
//! the (sorted) debugging tasks it solves; replies are built so that exactly
//! those tasks succeed.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::OnceLock;

use genplan::harness::{build_dataset, select_debug_tasks, DatasetEntry, PipelineInputs, Stage};
use genplan::tasks::{load_tasks, DebugTask, DomainSource, TaskEntry};
use genplan_core::encoding::encode_task;
use genplan_core::executor::Executor;
use genplan_core::llm::{ChatBackend, CompletionRequest, Role, ScriptedBackend};
use genplan_core::planner::{solve_optimal, SearchLimits};

use crate::common::programs::{shim_worker, GRIPPER};

pub struct Fixture {
    pub domain: DomainSource,
    pub tasks: Vec<TaskEntry>,
    pub dataset: Vec<DatasetEntry>,
    /// Problem name (`gripper-03`) to task id (`p03`).
    pub ids_by_name: BTreeMap<String, String>,
    pub optimal: BTreeMap<String, Vec<String>>,
    pub fingerprints: BTreeMap<String, String>,
}

impl Fixture {
    pub fn task(&self, id: &str) -> &TaskEntry {
        self.tasks.iter().find(|t| t.id == id).unwrap()
    }

    pub fn debug_ids(&self, rng_seed: u64) -> Vec<String> {
        select_debug_tasks(&self.dataset, 6, rng_seed).unwrap()
    }

    pub fn debug_tasks(&self, ids: &[String]) -> Vec<DebugTask> {
        ids.iter()
            .map(|id| DebugTask {
                entry: self.task(id).clone(),
                nl: format!("TASK {id}"),
            })
            .collect()
    }

    pub fn inputs<'a>(&'a self, executor: &'a Executor, stop_after: Stage) -> PipelineInputs<'a> {
        PipelineInputs {
            domain: &self.domain,
            tasks: &self.tasks,
            dataset: &self.dataset,
            executor,
            stop_after,
        }
    }
}

pub fn gripper_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/gripper")
}

/// Same key the generated programs compute from their `init` argument.
fn fingerprint(task: &TaskEntry) -> String {
    let mut facts: Vec<String> = encode_task(&task.task.problem, 0).init.iter().map(|f| f.join(" ")).collect();
    facts.sort();
    facts.join(" ")
}

pub fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let domain = DomainSource::load(&gripper_dir().join("domain.pddl")).unwrap();
        let tasks = load_tasks(&gripper_dir().join("problems"), &domain).unwrap();
        let limits = SearchLimits {
            max_states: 500_000,
            max_seconds: 60.0,
        };
        let dataset = build_dataset(&tasks, limits);
        let optimal = tasks
            .iter()
            .filter_map(|t| {
                let plan = solve_optimal(&t.task, limits).plan()?.clone();
                Some((t.id.clone(), plan.steps.iter().map(ToString::to_string).collect()))
            })
            .collect();
        Fixture {
            ids_by_name: tasks.iter().map(|t| (t.task.problem.name.clone(), t.id.clone())).collect(),
            fingerprints: tasks.iter().map(|t| (t.id.clone(), fingerprint(t))).collect(),
            optimal,
            dataset,
            domain,
            tasks,
        }
    })
}

pub fn executor() -> Executor {
    Executor::new(shim_worker()).with_max_workers(6)
}

/// Solved counts: one per pseudocode version, one list of revisions per
/// initial program. Past the end of a list the last entry repeats.
#[derive(Debug, Clone)]
pub struct Script {
    pub strategy: Vec<usize>,
    pub code: Vec<Vec<usize>>,
}

impl Script {
    pub fn solves_all() -> Self {
        Script {
            strategy: vec![6],
            code: vec![vec![6]],
        }
    }

    fn strategy_count(&self, version: usize) -> usize {
        self.strategy[version.min(self.strategy.len() - 1)]
    }

    fn code_count(&self, initial: usize, revision: usize) -> usize {
        let revisions = &self.code[(initial - 1).min(self.code.len() - 1)];
        revisions[revision.min(revisions.len() - 1)]
    }
}

fn python_set(items: &[&String]) -> String {
    format!("set({})", serde_json::to_string(items).unwrap())
}

/// The gripper solver, refusing (empty plan) on every debugging task except
/// the first `solved` ones.
pub fn guarded_program(f: &Fixture, debug_ids: &[String], solved: usize, tag: &str) -> String {
    let all: Vec<&String> = debug_ids.iter().map(|id| &f.fingerprints[id]).collect();
    let allowed = &all[..solved.min(all.len())];
    let header = "def get_plan(objects, init, goal):\n";
    let guard = format!(
        "# {tag}\nDEBUG = {}\nALLOW = {}\n\n{header}    key = ' '.join(sorted(' '.join(f) for f in init))\n    if key in DEBUG and key not in ALLOW:\n        return []\n",
        python_set(&all),
        python_set(allowed),
    );
    GRIPPER.trim_start().replacen(header, &guard, 1)
}

fn between<'a>(text: &'a str, start: &str, end: char) -> Option<&'a str> {
    let from = text.find(start)? + start.len();
    let rest = &text[from..];
    Some(rest[..rest.find(end).unwrap_or(rest.len())].trim())
}

fn last_user(req: &CompletionRequest) -> &str {
    req.messages.iter().rev().find(|m| m.role == Role::User).map_or("", |m| m.content.as_str())
}

/// Scripted model for one run over `debug_ids`.
pub fn scripted(debug_ids: Vec<String>, script: Script) -> Box<dyn ChatBackend> {
    let f = fixture();
    let mut versions = 0usize;
    let mut initial = 0usize;
    let mut revision = 0usize;
    Box::new(ScriptedBackend(move |req: &CompletionRequest| {
        let prompt = last_user(req);
        match req.label.as_str() {
            "domain_nl" => "The gripper domain: a robot with grippers carries balls between rooms.".to_string(),
            "task_nl" => {
                let name = between(prompt, "(problem ", ')').expect("problem name in prompt");
                format!("TASK {}", f.ids_by_name[name])
            }
            "pseudocode" | "strategy_revision" => {
                let v = versions;
                versions += 1;
                format!("Here is the strategy.\n```\nVERSION {v}\n1. For each ball not at its goal room, carry it there.\n```")
            }
            "plan" => {
                let v: usize = between(prompt, "VERSION ", '\n').unwrap().parse().unwrap();
                let id = between(prompt, "TASK ", '\n').unwrap();
                let rank = debug_ids.iter().position(|d| d == id).unwrap();
                if rank < script.strategy_count(v) {
                    format!("```\n{}\n```", f.optimal[id].join("\n"))
                } else {
                    "```\n(teleport b1)\n```".to_string()
                }
            }
            "strategy_reflection" | "code_reflection" => "The loop ignores balls that are already held.".to_string(),
            "code_initial" => {
                initial += 1;
                revision = 0;
                let src = guarded_program(f, &debug_ids, script.code_count(initial, 0), &format!("program {initial}.0"));
                format!("```python\n{src}```")
            }
            "code_revision" => {
                revision += 1;
                let src = guarded_program(
                    f,
                    &debug_ids,
                    script.code_count(initial, revision),
                    &format!("program {initial}.{revision}"),
                );
                format!("```python\n{src}```")
            }
            other => panic!("unexpected request label {other}"),
        }
    }))
}
