//! Dataset handling, debugging-task selection, evaluation under four
//! orderings, full-pipeline orchestration and persistence.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use genplan_core::encoding::{encode_task, TaskEncoding};
use genplan_core::executor::{Executor, ExecutorError, Job};
use genplan_core::feedback::{FeedbackCategory, ProgramOutcome};
use genplan_core::llm::{ChatBackend, Gateway, LlmError};
use genplan_core::planner::{solve_optimal, SearchLimits, SolveResult};
use genplan_core::validator::{parse_plan_text, validate_plan};

use crate::code::{run_code_stage, CodeExample, CodeRunLog};
use crate::config::PipelineConfig;
use crate::error::StageError;
use crate::nl::NlDescriptions;
use crate::seeds::mix;
use crate::strategy::{run_strategy_stage, StrategyRunLog};
use crate::tasks::{DebugTask, DomainSource, TaskEntry};

/// Number of presentation orderings a program must solve a task under.
pub const ORDERINGS: usize = 4;
/// Candidate pool size for debugging-task selection.
pub const SMALLEST_POOL: usize = 16;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("only {available} tasks are among the smallest by both object count and plan length; {needed} needed")]
    InsufficientCandidates { available: usize, needed: usize },
    #[error("no evaluation tasks")]
    NoTasks,
    #[error(transparent)]
    Executor(#[from] ExecutorError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub id: String,
    pub path: PathBuf,
    pub object_count: usize,
    pub optimal_len: Option<usize>,
    /// Length of a valid `<id>.plan` file next to the problem, if any.
    pub satisficing_len: Option<usize>,
}

impl DatasetEntry {
    pub fn plan_len(&self) -> Option<usize> {
        self.optimal_len.or(self.satisficing_len)
    }
}

/// Compute object counts and reference plan lengths.
pub fn build_dataset(tasks: &[TaskEntry], limits: SearchLimits) -> Vec<DatasetEntry> {
    tasks
        .iter()
        .map(|t| {
            let optimal_len = match solve_optimal(&t.task, limits) {
                SolveResult::Solved(p) => Some(p.len()),
                _ => None,
            };
            let satisficing_len = fs::read_to_string(t.path.with_extension("plan"))
                .ok()
                .and_then(|text| parse_plan_text(&text).ok())
                .filter(|p| validate_plan(&t.task, p).is_valid())
                .map(|p| p.len());
            DatasetEntry {
                id: t.id.clone(),
                path: t.path.clone(),
                object_count: t.task.problem.objects.len(),
                optimal_len,
                satisficing_len,
            }
        })
        .collect()
}

/// Largest value among the `k` smallest (ties at the boundary included).
fn smallest_k_threshold(mut values: Vec<usize>, k: usize) -> Option<usize> {
    values.sort_unstable();
    values.get(k.min(values.len()).checked_sub(1)?).copied()
}

/// Pick `count` tasks uniformly from those among the 16 smallest by object
/// count and among the 16 smallest by plan length. Returned ids are sorted.
pub fn select_debug_tasks(dataset: &[DatasetEntry], count: usize, rng_seed: u64) -> Result<Vec<String>, HarnessError> {
    let known: Vec<&DatasetEntry> = dataset.iter().filter(|e| e.plan_len().is_some()).collect();
    let objects = smallest_k_threshold(known.iter().map(|e| e.object_count).collect(), SMALLEST_POOL);
    let lengths = smallest_k_threshold(known.iter().filter_map(|e| e.plan_len()).collect(), SMALLEST_POOL);
    let mut candidates: Vec<&str> = match (objects, lengths) {
        (Some(o), Some(l)) => known
            .iter()
            .filter(|e| e.object_count <= o && e.plan_len().is_some_and(|p| p <= l))
            .map(|e| e.id.as_str())
            .collect(),
        _ => Vec::new(),
    };
    if candidates.len() < count {
        return Err(HarnessError::InsufficientCandidates {
            available: candidates.len(),
            needed: count,
        });
    }
    candidates.sort_unstable();
    let mut rng = ChaCha8Rng::seed_from_u64(mix(rng_seed, "debug-tasks"));
    candidates.shuffle(&mut rng);
    let mut chosen: Vec<String> = candidates[..count].iter().map(|s| s.to_string()).collect();
    chosen.sort();
    Ok(chosen)
}

/// Split the debugging tasks into disjoint example pairs (seeded shuffle).
pub fn example_pairs(debug_ids: &[String], rng_seed: u64) -> Vec<[String; 2]> {
    let mut ids = debug_ids.to_vec();
    ids.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(mix(rng_seed, "example-pairs"));
    ids.shuffle(&mut rng);
    ids.chunks_exact(2).map(|c| [c[0].clone(), c[1].clone()]).collect()
}

/// Ordering seed `k` (0..4) for a task; 0 is the declaration order.
pub fn ordering_seed(task_id: &str, k: usize) -> u64 {
    if k == 0 {
        0
    } else {
        mix(k as u64, task_id)
    }
}

/// Error classes used for the error-type breakdown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorType {
    Timeout,
    Exception,
    NonExecutablePlan,
    GoalNotReached,
    WrongType,
}

impl ErrorType {
    /// `None` for a solved execution.
    pub fn of(outcome: &ProgramOutcome) -> Option<Self> {
        Some(match FeedbackCategory::of_program(outcome)? {
            FeedbackCategory::Timeout => ErrorType::Timeout,
            FeedbackCategory::Exception => ErrorType::Exception,
            FeedbackCategory::WrongOutputType => ErrorType::WrongType,
            FeedbackCategory::GoalNotReached => ErrorType::GoalNotReached,
            FeedbackCategory::UnknownObject
            | FeedbackCategory::UnknownAction
            | FeedbackCategory::ArityMismatch
            | FeedbackCategory::DynamicPrecondition
            | FeedbackCategory::StaticPrecondition => ErrorType::NonExecutablePlan,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingRun {
    pub seed: u64,
    pub outcome: ProgramOutcome,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskEval {
    pub task_id: String,
    pub object_count: usize,
    pub runs: Vec<OrderingRun>,
    pub solved: bool,
    /// Length of the declaration-order plan when that plan is valid.
    pub plan_len: Option<usize>,
    pub oracle_len: Option<usize>,
}

impl TaskEval {
    pub fn plan_len_ratio(&self) -> Option<f64> {
        match (self.plan_len, self.oracle_len) {
            (Some(p), Some(o)) if o > 0 => Some(p as f64 / o as f64),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub limit_secs: f64,
    pub tasks: Vec<TaskEval>,
    pub coverage: f64,
}

impl EvalResult {
    pub fn solved_count(&self) -> usize {
        self.tasks.iter().filter(|t| t.solved).count()
    }

    /// Coverage recomputed from the stored per-ordering outcomes.
    pub fn recomputed_coverage(&self) -> f64 {
        let solved = self
            .tasks
            .iter()
            .filter(|t| t.runs.len() == ORDERINGS && t.runs.iter().all(|r| r.outcome.is_solved()))
            .count();
        100.0 * solved as f64 / self.tasks.len() as f64
    }

    /// Count of failed executions per error type.
    pub fn error_breakdown(&self) -> BTreeMap<ErrorType, usize> {
        let mut out = BTreeMap::new();
        for r in self.tasks.iter().flat_map(|t| &t.runs) {
            if let Some(e) = ErrorType::of(&r.outcome) {
                *out.entry(e).or_insert(0) += 1;
            }
        }
        out
    }

    /// Copy with wall times zeroed, for comparing runs.
    pub fn without_timings(&self) -> Self {
        let mut c = self.clone();
        for r in c.tasks.iter_mut().flat_map(|t| t.runs.iter_mut()) {
            r.wall_ms = 0;
        }
        c
    }
}

/// An evaluation task with its optional oracle plan length.
pub struct EvalTask<'a> {
    pub entry: &'a TaskEntry,
    pub oracle_len: Option<usize>,
}

/// Run `source` on every task under all four orderings.
pub fn evaluate_program(
    executor: &Executor,
    source: &str,
    tasks: &[EvalTask<'_>],
    limit: Duration,
) -> Result<EvalResult, HarnessError> {
    if tasks.is_empty() {
        return Err(HarnessError::NoTasks);
    }
    let encodings: Vec<Vec<(u64, TaskEncoding)>> = tasks
        .iter()
        .map(|t| {
            (0..ORDERINGS)
                .map(|k| {
                    let seed = ordering_seed(&t.entry.id, k);
                    (seed, encode_task(&t.entry.task.problem, seed))
                })
                .collect()
        })
        .collect();
    let jobs: Vec<Job<'_>> = tasks
        .iter()
        .zip(&encodings)
        .flat_map(|(t, encs)| {
            encs.iter().map(move |(_, encoding)| Job {
                source,
                encoding,
                task: &t.entry.task,
            })
        })
        .collect();
    let mut results = executor.run_batch(&jobs, limit).into_iter();

    let mut evals = Vec::with_capacity(tasks.len());
    for (t, encs) in tasks.iter().zip(&encodings) {
        let mut runs = Vec::with_capacity(ORDERINGS);
        for (seed, _) in encs {
            let e = results.next().expect("one result per job")?;
            runs.push(OrderingRun {
                seed: *seed,
                outcome: e.outcome,
                wall_ms: e.wall_time.as_millis() as u64,
            });
        }
        let plan_len = match &runs[0].outcome {
            o @ ProgramOutcome::PlanProduced { plan_text, .. } if o.is_solved() => Some(plan_text.lines().count()),
            _ => None,
        };
        evals.push(TaskEval {
            task_id: t.entry.id.clone(),
            object_count: t.entry.task.problem.objects.len(),
            solved: runs.iter().all(|r| r.outcome.is_solved()),
            runs,
            plan_len,
            oracle_len: t.oracle_len,
        });
    }
    let solved = evals.iter().filter(|t| t.solved).count();
    Ok(EvalResult {
        limit_secs: limit.as_secs_f64(),
        coverage: 100.0 * solved as f64 / evals.len() as f64,
        tasks: evals,
    })
}

/// Last stage a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Nl,
    Strategy,
    Code,
    Eval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum RunStatus {
    Completed,
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: PipelineConfig,
    pub run_index: usize,
    pub debug_tasks: Vec<String>,
    pub example_pair: [String; 2],
    pub nl: NlDescriptions,
    pub strategy: Option<StrategyRunLog>,
    pub code: Option<CodeRunLog>,
    pub selected_program: Option<String>,
    pub evaluation: Option<EvalResult>,
    /// Relative to the run directory.
    pub transcript: String,
    pub status: RunStatus,
}

impl RunRecord {
    /// Copy with wall times removed, for byte-level comparisons.
    pub fn without_timings(&self) -> Self {
        let mut c = self.clone();
        c.evaluation = c.evaluation.map(|e| e.without_timings());
        c
    }

    pub fn coverage(&self) -> Option<f64> {
        self.evaluation.as_ref().map(|e| e.coverage)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_index: usize,
    pub completed: bool,
    pub error: Option<String>,
    pub coverage: Option<f64>,
    pub selected_lineage: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: Vec<RunSummary>,
    pub best_run: Option<usize>,
    pub best_coverage: Option<f64>,
    /// Mean over the runs that produced a coverage value.
    pub avg_coverage: Option<f64>,
    /// True when some run did not complete.
    pub partial: bool,
}

pub fn summarize(records: &[RunRecord]) -> Summary {
    let runs: Vec<RunSummary> = records
        .iter()
        .map(|r| RunSummary {
            run_index: r.run_index,
            completed: r.status == RunStatus::Completed,
            error: match &r.status {
                RunStatus::Failed { error } => Some(error.clone()),
                RunStatus::Completed => None,
            },
            coverage: r.coverage(),
            selected_lineage: r.code.as_ref().map(|c| c.selected().lineage()),
        })
        .collect();
    let covered: Vec<(usize, f64)> = runs.iter().filter_map(|r| r.coverage.map(|c| (r.run_index, c))).collect();
    let best = covered
        .iter()
        .copied()
        .fold(None::<(usize, f64)>, |acc, x| match acc {
            Some(a) if a.1 >= x.1 => Some(a),
            _ => Some(x),
        });
    Summary {
        partial: runs.iter().any(|r| !r.completed),
        avg_coverage: (!covered.is_empty()).then(|| covered.iter().map(|c| c.1).sum::<f64>() / covered.len() as f64),
        best_run: best.map(|b| b.0),
        best_coverage: best.map(|b| b.1),
        runs,
    }
}

/// Inputs shared by all runs of one pipeline invocation.
pub struct PipelineInputs<'a> {
    pub domain: &'a DomainSource,
    pub tasks: &'a [TaskEntry],
    pub dataset: &'a [DatasetEntry],
    pub executor: &'a Executor,
    pub stop_after: Stage,
}

fn entry<'a>(tasks: &'a [TaskEntry], id: &str) -> &'a TaskEntry {
    tasks.iter().find(|t| t.id == id).expect("dataset ids come from the task list")
}

struct RunState {
    nl: NlDescriptions,
    strategy: Option<StrategyRunLog>,
    code: Option<CodeRunLog>,
    evaluation: Option<EvalResult>,
}

fn run_stages(
    config: &PipelineConfig,
    inputs: &PipelineInputs<'_>,
    debug_ids: &[String],
    pair: &[String; 2],
    llm: &mut Gateway,
    state: &mut RunState,
) -> Result<(), String> {
    let domain_pddl = &inputs.domain.pddl;
    let domain_nl = state.nl.gen_domain_nl(domain_pddl, llm).map_err(|e| e.to_string())?;
    let mut debug = Vec::new();
    for id in debug_ids {
        let e = entry(inputs.tasks, id);
        let nl = state.nl.gen_task_nl(id, &e.pddl, domain_pddl, llm).map_err(|e| e.to_string())?;
        debug.push(DebugTask { entry: e.clone(), nl });
    }
    if inputs.stop_after == Stage::Nl {
        return Ok(());
    }

    let examples = [state.nl.tasks[&pair[0]].as_str(), state.nl.tasks[&pair[1]].as_str()];
    let strategy = run_strategy_stage(config, &domain_nl, examples, &debug, llm).map_err(|e| e.to_string())?;
    let pseudocode = strategy.selected().text.clone();
    let example_plan = strategy.example_plan();
    state.strategy = Some(strategy);
    if inputs.stop_after == Stage::Strategy {
        return Ok(());
    }

    let (example_id, plan) = match example_plan {
        Some(x) => x,
        None => {
            let e = entry(inputs.tasks, &pair[0]);
            match solve_optimal(&e.task, SearchLimits::default()) {
                SolveResult::Solved(p) => (e.id.clone(), p.steps.iter().map(ToString::to_string).collect()),
                other => return Err(format!("no example plan for {}: {other:?}", e.id)),
            }
        }
    };
    let example = CodeExample {
        encoding: encode_task(&entry(inputs.tasks, &example_id).task.problem, 0),
        task_id: example_id,
        plan,
    };
    let code = run_code_stage(config, &pseudocode, &example, &debug, llm, inputs.executor).map_err(|e| match e {
        StageError::Executor(x) => format!("infrastructure error: {x}"),
        other => other.to_string(),
    })?;
    let source = code.selected().source.clone();
    state.code = Some(code);
    if inputs.stop_after == Stage::Code {
        return Ok(());
    }

    let debug_set: BTreeSet<&str> = debug_ids.iter().map(String::as_str).collect();
    let oracle: BTreeMap<&str, Option<usize>> = inputs.dataset.iter().map(|d| (d.id.as_str(), d.optimal_len)).collect();
    let eval_tasks: Vec<EvalTask<'_>> = inputs
        .tasks
        .iter()
        .filter(|t| !debug_set.contains(t.id.as_str()))
        .map(|t| EvalTask {
            entry: t,
            oracle_len: oracle.get(t.id.as_str()).copied().flatten(),
        })
        .collect();
    let limit = Duration::from_secs_f64(config.time_limit_secs);
    state.evaluation = Some(evaluate_program(inputs.executor, &source, &eval_tasks, limit).map_err(|e| e.to_string())?);
    Ok(())
}

/// Run all stages once for one example pair. Stage failures are recorded in
/// the returned record rather than propagated.
pub fn run_single(
    config: &PipelineConfig,
    run_index: usize,
    inputs: &PipelineInputs<'_>,
    debug_ids: &[String],
    pair: &[String; 2],
    llm: &mut Gateway,
) -> RunRecord {
    let mut state = RunState {
        nl: NlDescriptions::default(),
        strategy: None,
        code: None,
        evaluation: None,
    };
    let status = match run_stages(config, inputs, debug_ids, pair, llm, &mut state) {
        Ok(()) => RunStatus::Completed,
        Err(error) => RunStatus::Failed { error },
    };
    RunRecord {
        config: config.clone(),
        run_index,
        debug_tasks: debug_ids.to_vec(),
        example_pair: pair.clone(),
        selected_program: state.code.as_ref().map(|c| c.selected().source.clone()),
        nl: state.nl,
        strategy: state.strategy,
        code: state.code,
        evaluation: state.evaluation,
        transcript: TRANSCRIPT_FILE.to_string(),
        status,
    }
}

/// Gateway over `backend` with the model, temperature and seed of `config`.
pub fn configured_gateway(config: &PipelineConfig, backend: Box<dyn ChatBackend>) -> Gateway {
    let mut g = Gateway::new(backend);
    g.model = config.model.clone();
    g.temperature = config.temperature;
    g.seed = config.seed;
    g
}

pub const TRANSCRIPT_FILE: &str = "transcript.jsonl";
pub const RECORD_FILE: &str = "record.json";
pub const SUMMARY_FILE: &str = "summary.json";

pub fn run_dir(results: &Path, run_index: usize) -> PathBuf {
    results.join(format!("run-{run_index}"))
}

/// One run per example pair. `make_llm` builds the gateway for a run.
pub fn run_full_pipeline(
    config: &PipelineConfig,
    inputs: &PipelineInputs<'_>,
    mut make_llm: impl FnMut(usize) -> Result<Gateway, LlmError>,
    results: Option<&Path>,
) -> Result<(Vec<RunRecord>, Summary), HarnessError> {
    config.validate().map_err(HarnessError::Config)?;
    let debug_ids = select_debug_tasks(inputs.dataset, config.debug_task_count, config.rng_seed)?;
    let pairs = example_pairs(&debug_ids, config.rng_seed);
    let mut records = Vec::new();
    for (k, pair) in pairs.iter().enumerate() {
        let run_index = k + 1;
        let (record, transcript) = match make_llm(run_index) {
            Ok(mut llm) => {
                let r = run_single(config, run_index, inputs, &debug_ids, pair, &mut llm);
                (r, Some(llm.transcript().clone()))
            }
            Err(e) => (failed_run(config, run_index, &debug_ids, pair, e.to_string()), None),
        };
        if let Some(dir) = results {
            persist_run(&run_dir(dir, run_index), &record, transcript.as_ref())?;
        }
        records.push(record);
    }
    let summary = summarize(&records);
    if let Some(dir) = results {
        write_json(&dir.join(SUMMARY_FILE), &summary)?;
    }
    Ok((records, summary))
}

fn failed_run(config: &PipelineConfig, run_index: usize, debug_ids: &[String], pair: &[String; 2], error: String) -> RunRecord {
    RunRecord {
        config: config.clone(),
        run_index,
        debug_tasks: debug_ids.to_vec(),
        example_pair: pair.clone(),
        nl: NlDescriptions::default(),
        strategy: None,
        code: None,
        selected_program: None,
        evaluation: None,
        transcript: TRANSCRIPT_FILE.to_string(),
        status: RunStatus::Failed { error },
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    fs::write(path, text + "\n").map_err(io_err(path))
}

fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    fs::write(path, text).map_err(io_err(path))
}

/// Write a run directory: transcript, NL texts, pseudocode versions,
/// program versions, evaluation and the full record.
pub fn persist_run(
    dir: &Path,
    record: &RunRecord,
    transcript: Option<&genplan_core::llm::Transcript>,
) -> Result<(), HarnessError> {
    for sub in ["nl", "strategy", "code"] {
        fs::create_dir_all(dir.join(sub)).map_err(io_err(dir))?;
    }
    if let Some(t) = transcript {
        let path = dir.join(TRANSCRIPT_FILE);
        t.save(&path).map_err(|e| HarnessError::Io {
            path,
            source: std::io::Error::other(e.to_string()),
        })?;
    }
    if let Some(d) = &record.nl.domain {
        write_text(&dir.join("nl/domain.txt"), d)?;
    }
    for (id, text) in &record.nl.tasks {
        write_text(&dir.join(format!("nl/{id}.txt")), text)?;
    }
    if let Some(s) = &record.strategy {
        for v in &s.versions {
            write_text(&dir.join(format!("strategy/v{}.txt", v.index)), &v.text)?;
        }
        write_json(&dir.join("strategy/log.json"), s)?;
    }
    if let Some(c) = &record.code {
        for v in &c.versions {
            write_text(&dir.join(format!("code/i{}_r{}.py", v.initial_index, v.revision)), &v.source)?;
        }
        write_json(&dir.join("code/log.json"), c)?;
    }
    if let Some(e) = &record.evaluation {
        write_json(&dir.join("eval.json"), e)?;
    }
    write_json(&dir.join(RECORD_FILE), record)
}

/// Markdown coverage table and CSV scatter data for every run under `results`.
pub struct Report {
    pub table: String,
    pub plan_lengths_csv: String,
    pub runtimes_csv: String,
}

pub fn load_records(results: &Path) -> Result<Vec<RunRecord>, HarnessError> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(results)
        .map_err(io_err(results))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(RECORD_FILE).is_file())
        .collect();
    dirs.sort();
    dirs.iter()
        .map(|d| {
            let path = d.join(RECORD_FILE);
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            serde_json::from_str(&text).map_err(|e| HarnessError::Io {
                path,
                source: std::io::Error::other(e.to_string()),
            })
        })
        .collect()
}

pub fn build_report(records: &[RunRecord]) -> Report {
    let summary = summarize(records);
    let mut table = String::from("| run | status | coverage | selected | timeout | exception | non-executable | goal not reached | wrong type |\n|---|---|---|---|---|---|---|---|---|\n");
    for (r, s) in records.iter().zip(&summary.runs) {
        let errors = r.evaluation.as_ref().map(EvalResult::error_breakdown).unwrap_or_default();
        let count = |e: ErrorType| errors.get(&e).copied().unwrap_or(0);
        table.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} |\n",
            r.run_index,
            if s.completed { "completed" } else { "failed" },
            s.coverage.map_or("-".into(), |c| format!("{c:.1}")),
            s.selected_lineage.map_or("-".into(), |(i, k)| format!("({i},{k})")),
            count(ErrorType::Timeout),
            count(ErrorType::Exception),
            count(ErrorType::NonExecutablePlan),
            count(ErrorType::GoalNotReached),
            count(ErrorType::WrongType),
        ));
    }
    table.push_str(&format!(
        "\nAvg coverage ({} runs): {}\nCoverage best run: {}{}\n",
        summary.runs.len(),
        summary.avg_coverage.map_or("-".into(), |c| format!("{c:.1}")),
        summary.best_coverage.map_or("-".into(), |c| format!("{c:.1}")),
        if summary.partial { "\n(partial: some runs failed)" } else { "" },
    ));

    let mut plan_lengths_csv = String::from("run,task,oracle_len,plan_len\n");
    let mut runtimes_csv = String::from("run,task,object_count,wall_ms\n");
    for r in records {
        for t in r.evaluation.iter().flat_map(|e| &e.tasks) {
            if let (Some(o), Some(p)) = (t.oracle_len, t.plan_len) {
                plan_lengths_csv.push_str(&format!("{},{},{o},{p}\n", r.run_index, t.task_id));
            }
            if let Some(first) = t.runs.first().filter(|x| x.outcome.is_solved()) {
                runtimes_csv.push_str(&format!("{},{},{},{}\n", r.run_index, t.task_id, t.object_count, first.wall_ms));
            }
        }
    }
    Report {
        table,
        plan_lengths_csv,
        runtimes_csv,
    }
}
