use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use genplan::harness::{
    build_dataset, build_report, configured_gateway, evaluate_program, load_records, run_dir, run_full_pipeline,
    write_json, EvalTask, PipelineInputs, RunRecord, Stage, TRANSCRIPT_FILE,
};
use genplan::tasks::{load_tasks, DomainSource, TaskEntry};
use genplan::PipelineConfig;
use genplan_core::executor::{Executor, WorkerCommand};
use genplan_core::feedback::render_validation_feedback;
use genplan_core::llm::{load_transcript, LiveBackend, LlmError, ReplayBackend};
use genplan_core::pddl::{parse_domain, parse_problem, print_domain, print_problem, Task};
use genplan_core::planner::{solve_optimal, SearchLimits, SolveResult};
use genplan_core::validator::{parse_plan_text, validate_plan};

#[derive(Parser)]
#[command(name = "genplan", version, about = "Generalized-plan synthesis toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a domain (and optionally a problem) and print it normalized.
    Parse { domain: PathBuf, problem: Option<PathBuf> },
    /// Validate a plan; exits 0 when valid, 1 otherwise.
    Validate { domain: PathBuf, problem: PathBuf, plan: PathBuf },
    /// Print an optimal plan, one action per line.
    Solve {
        domain: PathBuf,
        problem: PathBuf,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Generate the natural-language descriptions only.
    Nl(RunArgs),
    /// Run up to the pseudocode debugging stage.
    Strategy(RunArgs),
    /// Run up to the program debugging stage.
    Codegen(RunArgs),
    /// Run every stage including evaluation.
    Pipeline(RunArgs),
    /// Evaluate a program on a dataset under four orderings.
    Eval(EvalArgs),
    /// Re-run a results directory from its recorded transcripts.
    Replay(ReplayArgs),
    /// Coverage table and scatter data for a results directory.
    Report {
        results: PathBuf,
        /// Directory for the report files (defaults to the results directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone, Copy)]
struct LimitArgs {
    /// State budget for the optimal planner.
    #[arg(long, default_value_t = 500_000)]
    max_states: usize,
    /// Time budget for the optimal planner, in seconds.
    #[arg(long, default_value_t = 20.0)]
    max_seconds: f64,
}

impl From<LimitArgs> for SearchLimits {
    fn from(a: LimitArgs) -> Self {
        SearchLimits {
            max_states: a.max_states,
            max_seconds: a.max_seconds,
        }
    }
}

#[derive(Args)]
struct DataArgs {
    /// Directory holding `domain.pddl` and `problems/*.pddl`.
    #[arg(long)]
    data: PathBuf,
    /// Worker command line; defaults to the GENPLAN_WORKER variable.
    #[arg(long)]
    worker: Option<String>,
    /// Parallel executions.
    #[arg(long, default_value_t = 4)]
    jobs: usize,
    #[command(flatten)]
    limits: LimitArgs,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    /// JSON file with a pipeline configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named configuration: f3-6, f5-3, -sd, -cr, -mc.
    #[arg(long, allow_hyphen_values = true)]
    preset: Option<String>,
    /// Results directory.
    #[arg(long, default_value = "results")]
    results: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Program source to evaluate.
    #[arg(long)]
    program: PathBuf,
    /// Time limit per execution, in seconds.
    #[arg(long, default_value_t = 45.0)]
    limit: f64,
    /// Task ids to leave out, e.g. the debugging tasks.
    #[arg(long, value_delimiter = ',')]
    exclude: Vec<String>,
    /// Skip oracle plan lengths.
    #[arg(long)]
    no_oracle: bool,
    /// Write the evaluation result as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Results directory produced by a previous run.
    results: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Accept requests whose digest differs from the recorded one.
    #[arg(long)]
    replay_loose: bool,
    /// Where to write the replayed results.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| path.display().to_string())
}

fn load_task(domain: &Path, problem: &Path) -> Result<Task> {
    Task::from_text(&read(domain)?, &read(problem)?).with_context(|| format!("{}", problem.display()))
}

struct Dataset {
    domain: DomainSource,
    tasks: Vec<TaskEntry>,
}

fn load_dataset(dir: &Path) -> Result<Dataset> {
    let domain = DomainSource::load(&dir.join("domain.pddl"))?;
    let tasks = load_tasks(&dir.join("problems"), &domain)?;
    if tasks.is_empty() {
        bail!("no problems in {}", dir.join("problems").display());
    }
    Ok(Dataset { domain, tasks })
}

fn executor(args: &DataArgs) -> Result<Executor> {
    let worker = match &args.worker {
        Some(line) => WorkerCommand::parse(line).context("empty worker command")?,
        None => WorkerCommand::from_env()?,
    };
    Ok(Executor::new(worker).with_max_workers(args.jobs))
}

fn load_config(args: &RunArgs) -> Result<PipelineConfig> {
    let config = match (&args.config, &args.preset) {
        (Some(path), _) => serde_json::from_str(&read(path)?).with_context(|| path.display().to_string())?,
        (None, Some(name)) => PipelineConfig::preset(name).with_context(|| format!("unknown preset {name}"))?,
        (None, None) => PipelineConfig::default(),
    };
    config.validate().map_err(anyhow::Error::msg)?;
    Ok(config)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Parse { domain, problem } => {
            let d = parse_domain(&read(&domain)?).with_context(|| domain.display().to_string())?;
            print!("{}", print_domain(&d));
            if let Some(problem) = problem {
                let p = parse_problem(&read(&problem)?, &d).with_context(|| problem.display().to_string())?;
                print!("\n{}", print_problem(&p));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { domain, problem, plan } => {
            let task = load_task(&domain, &problem)?;
            let plan = parse_plan_text(&read(&plan)?).map_err(|e| anyhow::anyhow!("{}: {e:?}", plan.display()))?;
            let outcome = validate_plan(&task, &plan);
            match render_validation_feedback(&outcome, &plan) {
                None => {
                    println!("valid ({} steps)", plan.len());
                    Ok(ExitCode::SUCCESS)
                }
                Some(fb) => {
                    println!("invalid [{}]\n{}", fb.category, fb.text);
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Solve { domain, problem, limits } => {
            let task = load_task(&domain, &problem)?;
            match solve_optimal(&task, limits.into()) {
                SolveResult::Solved(plan) => {
                    for step in &plan.steps {
                        println!("{step}");
                    }
                    Ok(ExitCode::SUCCESS)
                }
                SolveResult::Unsolvable => {
                    eprintln!("unsolvable");
                    Ok(ExitCode::from(1))
                }
                SolveResult::ResourceExhausted { states } => {
                    eprintln!("search budget exhausted after {states} states");
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Nl(args) => run_stages(&args, Stage::Nl),
        Command::Strategy(args) => run_stages(&args, Stage::Strategy),
        Command::Codegen(args) => run_stages(&args, Stage::Code),
        Command::Pipeline(args) => run_stages(&args, Stage::Eval),
        Command::Eval(args) => eval(&args),
        Command::Replay(args) => replay(&args),
        Command::Report { results, out } => {
            let records = load_records(&results)?;
            if records.is_empty() {
                bail!("no run records under {}", results.display());
            }
            let report = build_report(&records);
            let out = out.unwrap_or(results);
            fs::create_dir_all(&out)?;
            fs::write(out.join("coverage.md"), &report.table)?;
            fs::write(out.join("plan_lengths.csv"), &report.plan_lengths_csv)?;
            fs::write(out.join("runtimes.csv"), &report.runtimes_csv)?;
            print!("{}", report.table);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn print_summary(records: &[RunRecord]) {
    for r in records {
        let cov = r.coverage().map_or("-".to_string(), |c| format!("{c:.1}%"));
        match &r.status {
            genplan::harness::RunStatus::Completed => println!("run {}: completed, coverage {cov}", r.run_index),
            genplan::harness::RunStatus::Failed { error } => println!("run {}: failed: {error}", r.run_index),
        }
    }
}

fn run_stages(args: &RunArgs, stop_after: Stage) -> Result<ExitCode> {
    let config = load_config(args)?;
    let data = load_dataset(&args.data.data)?;
    // Stages before code generation never start a worker.
    let executor = match executor(&args.data) {
        Ok(e) => e,
        Err(_) if stop_after < Stage::Code => Executor::new(WorkerCommand::new("genplan-no-worker", Vec::<String>::new())),
        Err(e) => return Err(e),
    };
    let dataset = build_dataset(&data.tasks, args.data.limits.into());
    let inputs = PipelineInputs {
        domain: &data.domain,
        tasks: &data.tasks,
        dataset: &dataset,
        executor: &executor,
        stop_after,
    };
    fs::create_dir_all(&args.results)?;
    let results = args.results.clone();
    let (records, summary) = run_full_pipeline(
        &config,
        &inputs,
        |k| {
            let backend = LiveBackend::from_env()?;
            let dir = run_dir(&results, k);
            fs::create_dir_all(&dir).map_err(|e| LlmError::io(&dir, e))?;
            configured_gateway(&config, Box::new(backend)).record_to(&dir.join(TRANSCRIPT_FILE))
        },
        Some(&args.results),
    )?;
    print_summary(&records);
    if let (Some(avg), Some(best)) = (summary.avg_coverage, summary.best_coverage) {
        println!("avg coverage {avg:.1}%, best run {best:.1}%{}", if summary.partial { " (partial)" } else { "" });
    }
    Ok(ExitCode::SUCCESS)
}

fn eval(args: &EvalArgs) -> Result<ExitCode> {
    let data = load_dataset(&args.data.data)?;
    let executor = executor(&args.data)?;
    let source = read(&args.program)?;
    let kept: Vec<&TaskEntry> = data.tasks.iter().filter(|t| !args.exclude.contains(&t.id)).collect();
    let oracle: Vec<Option<usize>> = if args.no_oracle {
        vec![None; kept.len()]
    } else {
        let owned: Vec<TaskEntry> = kept.iter().map(|t| (*t).clone()).collect();
        build_dataset(&owned, args.data.limits.into()).iter().map(|d| d.optimal_len).collect()
    };
    let tasks: Vec<EvalTask<'_>> = kept
        .iter()
        .zip(oracle)
        .map(|(entry, oracle_len)| EvalTask { entry, oracle_len })
        .collect();
    let result = evaluate_program(&executor, &source, &tasks, Duration::from_secs_f64(args.limit))?;
    for t in &result.tasks {
        let errors: Vec<String> = t
            .runs
            .iter()
            .filter_map(|r| genplan::harness::ErrorType::of(&r.outcome).map(|e| format!("{e:?}")))
            .collect();
        println!(
            "{} {}{}",
            t.task_id,
            if t.solved { "solved" } else { "unsolved" },
            if errors.is_empty() { String::new() } else { format!(" ({})", errors.join(", ")) }
        );
    }
    println!("coverage {:.1}% ({}/{})", result.coverage, result.solved_count(), result.tasks.len());
    if let Some(out) = &args.out {
        write_json(out, &result)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn furthest_stage(records: &[RunRecord]) -> Stage {
    records
        .iter()
        .map(|r| {
            if r.evaluation.is_some() {
                Stage::Eval
            } else if r.code.is_some() {
                Stage::Code
            } else if r.strategy.is_some() {
                Stage::Strategy
            } else {
                Stage::Nl
            }
        })
        .max()
        .unwrap_or(Stage::Eval)
}

fn replay(args: &ReplayArgs) -> Result<ExitCode> {
    let stored = load_records(&args.results)?;
    let Some(first) = stored.first() else {
        bail!("no run records under {}", args.results.display());
    };
    let config = first.config.clone();
    let loose = args.replay_loose || config.replay_loose;
    let data = load_dataset(&args.data.data)?;
    let executor = executor(&args.data)?;
    let dataset = build_dataset(&data.tasks, args.data.limits.into());
    let inputs = PipelineInputs {
        domain: &data.domain,
        tasks: &data.tasks,
        dataset: &dataset,
        executor: &executor,
        stop_after: furthest_stage(&stored),
    };
    let source = args.results.clone();
    let (records, _) = run_full_pipeline(
        &config,
        &inputs,
        |k| {
            let t = load_transcript(&run_dir(&source, k).join(TRANSCRIPT_FILE))?;
            Ok(configured_gateway(&config, Box::new(ReplayBackend::new(t).loose(loose))))
        },
        args.out.as_deref(),
    )?;
    print_summary(&records);
    let mut identical = true;
    for r in &records {
        let same = stored
            .iter()
            .find(|s| s.run_index == r.run_index)
            .is_some_and(|s| s.without_timings() == r.without_timings());
        identical &= same;
        println!("run {}: {}", r.run_index, if same { "matches recorded run" } else { "differs from recorded run" });
    }
    Ok(if identical { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
