//! Acceptance suite: one PASS/FAIL line per criterion.

#[path = "../../core/tests/common/mod.rs"]
mod common;
mod support;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::golden::{cases, golden};
use common::oracle::Oracle;
use common::programs::{shim_worker, GRIPPER, GRIPPER_ORDER_SENSITIVE, RAISES, RETURNS_INT, SLEEPS};
use common::{as_pairs, domain_text, fixture as core_fixture, load_domain, load_problems, random_plan, TOY_DOMAINS};
use genplan::harness::*;
use genplan::PipelineConfig;
use genplan_core::executor::Executor;
use genplan_core::feedback::{render_program_feedback, FeedbackCategory, ProgramOutcome};
use genplan_core::llm::{load_transcript, ReplayBackend, Transcript};
use genplan_core::pddl::Task;
use genplan_core::planner::{solve_optimal, SearchLimits, SolveResult};
use genplan_core::validator::validate_plan;
use support::{executor, fixture, scripted, Script};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn validator_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut agree = 0;
    for name in TOY_DOMAINS {
        let d = load_domain(name);
        let problems = load_problems(name, &d);
        for k in 0..100 {
            let task = Task::new(d.clone(), problems[k % problems.len()].2.clone());
            let oracle = Oracle::new(&task.domain, &task.problem);
            let plan = random_plan(&oracle, &mut rng);
            let got = validate_plan(&task, &plan);
            if (got.kind(), got.step_index()) == oracle.judge(&as_pairs(&plan)) {
                agree += 1;
            }
        }
    }
    let elapsed = started.elapsed();
    ensure!(agree == 300, "{agree}/300 agree");
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!("300/300 in {elapsed:.2?}"))
}

fn feedback_fidelity() -> Outcome {
    let mut exact = 0;
    let mut mismatched = Vec::new();
    for (category, outcome) in cases() {
        match render_program_feedback(&outcome) {
            Some(m) if m.category == category && m.text == golden(category) => exact += 1,
            _ => mismatched.push(category.to_string()),
        }
    }
    ensure!(exact == FeedbackCategory::ALL.len(), "mismatched rows: {}", mismatched.join(", "));
    Ok(format!("{exact}/9 rows byte-identical"))
}

/// Record a scripted run up to the code stage, then replay it.
fn replayed_run(config: &PipelineConfig, script: Script, stop_after: Stage) -> (RunRecord, Transcript) {
    let f = fixture();
    let ids = f.debug_ids(config.rng_seed);
    let pair = [ids[0].clone(), ids[1].clone()];
    let exec = executor();
    let inputs = f.inputs(&exec, stop_after);
    let mut live = configured_gateway(config, scripted(ids.clone(), script));
    let recorded = run_single(config, 1, &inputs, &ids, &pair, &mut live);
    let transcript = live.transcript().clone();
    let mut replay = configured_gateway(config, Box::new(ReplayBackend::new(transcript.clone())));
    let replayed = run_single(config, 1, &inputs, &ids, &pair, &mut replay);
    assert_eq!(recorded.without_timings(), replayed.without_timings());
    (replayed, replay.transcript().clone())
}

fn pipeline_protocol() -> Outcome {
    let started = Instant::now();
    let config = PipelineConfig {
        time_limit_secs: 5.0,
        ..PipelineConfig::f3_6()
    };
    let scenarios = [
        ("immediate success", Script::solves_all(), 0, (1, 0), true),
        (
            "exhaustion",
            Script {
                strategy: vec![0, 1, 2, 1, 0, 2, 1],
                code: vec![vec![0, 1, 2, 5, 1], vec![2], vec![1, 0]],
            },
            5,
            (1, 3),
            false,
        ),
        (
            "tie",
            Script {
                strategy: vec![2, 4, 4, 3, 4, 4, 4],
                code: vec![vec![0, 2, 4, 1], vec![3, 4, 2], vec![1]],
            },
            6,
            (2, 1),
            false,
        ),
    ];
    for (name, script, want_pseudocode, want_program, early) in scenarios {
        let (record, _) = replayed_run(&config, script, Stage::Code);
        ensure!(record.status == RunStatus::Completed, "{name}: {:?}", record.status);
        let strategy = record.strategy.as_ref().unwrap();
        let code = record.code.as_ref().unwrap();
        ensure!(strategy.versions.len() <= 7, "{name}: {} pseudocode versions", strategy.versions.len());
        ensure!(code.versions.len() <= 21, "{name}: {} program versions", code.versions.len());
        ensure!(
            strategy.selected_index == want_pseudocode,
            "{name}: pseudocode v{} selected",
            strategy.selected_index
        );
        ensure!(code.selected().lineage() == want_program, "{name}: program {:?} selected", code.selected().lineage());
        ensure!(code.early_stopped == early, "{name}: early stop {}", code.early_stopped);
        if early {
            ensure!(code.versions.len() == 1, "{name}: continued after solving every task");
        } else {
            ensure!(code.versions.len() == 21, "{name}: {} program versions", code.versions.len());
        }
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!("3 scenarios in {elapsed:.2?}"))
}

fn ablations() -> Outcome {
    let failing = || Script {
        strategy: vec![2],
        code: vec![vec![2]],
    };
    let t = |preset: &str| replayed_run(&PipelineConfig::preset(preset).unwrap(), failing(), Stage::Code).1;
    let sd = t("-sd");
    let sd_debug = sd.count_label("plan") + sd.count_label("strategy_reflection") + sd.count_label("strategy_revision");
    ensure!(sd_debug == 0, "-SD made {sd_debug} strategy-debug completions");
    let cr = t("-cr");
    ensure!(cr.count_label("code_reflection") == 0, "-CR reflected");
    ensure!(cr.count_label("code_revision") > 0, "-CR never revised");
    let mc = t("-mc");
    ensure!(mc.count_label("code_initial") == 1, "-MC: {} initial programs", mc.count_label("code_initial"));
    Ok("-SD 0 strategy-debug, -CR 0 reflections, -MC 1 initial program".into())
}

fn contains_path(text: &str) -> bool {
    text.split(|c: char| c.is_whitespace() || matches!(c, '"' | '\'' | '(' | ')' | ','))
        .any(|tok| (tok.len() > 1 && tok.contains('/')) || tok.contains(":\\") || tok.ends_with(".py"))
}

fn executor_limits() -> Outcome {
    let task = Task::from_text(&domain_text("gripper"), &core_fixture("toy_gripper_problem.pddl")).unwrap();
    let enc = genplan_core::encoding::encode_task(&task.problem, 0);
    let exec = Executor::new(shim_worker());
    let run = |src: &str, limit: u64| exec.run_generalized_plan(src, &enc, &task, Duration::from_secs(limit)).unwrap();

    let started = Instant::now();
    let timeout = run(SLEEPS, 1);
    let elapsed = started.elapsed();
    ensure!(matches!(timeout, ProgramOutcome::Timeout { .. }), "sleeper gave {timeout:?}");
    ensure!(elapsed < Duration::from_secs(3), "timeout took {elapsed:?}");

    let ProgramOutcome::RuntimeException { traceback } = run(RAISES, 10) else {
        return Err("raiser was not an exception".into());
    };
    ensure!(traceback.contains("ZeroDivisionError"), "traceback lost the error: {traceback}");
    ensure!(!contains_path(&traceback), "path in traceback: {traceback}");

    let categories = [run(SLEEPS, 1), run(RAISES, 10), run(RETURNS_INT, 10)].map(|o| FeedbackCategory::of_program(&o));
    ensure!(
        categories
            == [
                Some(FeedbackCategory::Timeout),
                Some(FeedbackCategory::Exception),
                Some(FeedbackCategory::WrongOutputType)
            ],
        "classified as {categories:?}"
    );
    Ok(format!("3/3 (timeout returned in {elapsed:.2?})"))
}

fn ordering_rule() -> Outcome {
    let f = fixture();
    let exec = executor();
    let tasks: Vec<EvalTask<'_>> = f.tasks[..10]
        .iter()
        .map(|entry| EvalTask {
            entry,
            oracle_len: None,
        })
        .collect();
    let limit = Duration::from_secs(10);
    let sensitive = evaluate_program(&exec, GRIPPER_ORDER_SENSITIVE, &tasks, limit).map_err(|e| e.to_string())?;
    let robust = evaluate_program(&exec, GRIPPER, &tasks, limit).map_err(|e| e.to_string())?;
    let declared_ok = sensitive.tasks.iter().all(|t| t.runs[0].outcome.is_solved());
    ensure!(declared_ok, "order-sensitive program fails even in declaration order");
    ensure!(sensitive.solved_count() < 10, "order-sensitive program solved all 10");
    ensure!(robust.coverage == 100.0, "order-insensitive coverage {}", robust.coverage);
    Ok(format!(
        "order-sensitive {}/10 (unsolved: {}), order-insensitive 10/10",
        sensitive.solved_count(),
        sensitive.tasks.iter().filter(|t| !t.solved).map(|t| t.task_id.as_str()).collect::<Vec<_>>().join(" ")
    ))
}

fn oracle_optimality() -> Outcome {
    let started = Instant::now();
    let toy = Task::from_text(&domain_text("gripper"), &core_fixture("toy_gripper_problem.pddl")).unwrap();
    let toy_len = solve_optimal(&toy, SearchLimits::default()).plan().map(|p| p.len());
    ensure!(toy_len == Some(3), "toy gripper length {toy_len:?}");
    let limits = SearchLimits {
        max_states: 500_000,
        max_seconds: 60.0,
    };
    let mut compared = 0;
    for name in TOY_DOMAINS {
        let d = load_domain(name);
        for (stem, _, p) in load_problems(name, &d) {
            let task = Task::new(d.clone(), p);
            let SolveResult::Solved(plan) = solve_optimal(&task, limits) else {
                return Err(format!("{name}/{stem} not solved"));
            };
            if plan.len() <= 8 {
                let expected = Oracle::new(&task.domain, &task.problem).shortest_plan_len(8);
                ensure!(Some(plan.len()) == expected, "{name}/{stem}: {} vs {expected:?}", plan.len());
                compared += 1;
            }
        }
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!("{compared} tasks match, toy gripper 3 steps, {elapsed:.2?}"))
}

fn determinism() -> Outcome {
    let f = fixture();
    let config = PipelineConfig {
        time_limit_secs: 10.0,
        ..PipelineConfig::f3_6()
    };
    let ids = f.debug_ids(config.rng_seed);
    let exec = executor();
    let inputs = f.inputs(&exec, Stage::Eval);
    let recorded = tempfile::tempdir().map_err(|e| e.to_string())?;
    let script = Script {
        strategy: vec![3, 5, 6],
        code: vec![vec![1, 4], vec![6]],
    };
    run_full_pipeline(
        &config,
        &inputs,
        |_| Ok(configured_gateway(&config, scripted(ids.clone(), script.clone()))),
        Some(recorded.path()),
    )
    .map_err(|e| e.to_string())?;

    let replay_once = || -> Result<(Vec<RunRecord>, String), String> {
        let out = tempfile::tempdir().map_err(|e| e.to_string())?;
        let (records, _) = run_full_pipeline(
            &config,
            &inputs,
            |k| {
                let t = load_transcript(&run_dir(recorded.path(), k).join(TRANSCRIPT_FILE))?;
                Ok(configured_gateway(&config, Box::new(ReplayBackend::new(t))))
            },
            Some(out.path()),
        )
        .map_err(|e| e.to_string())?;
        let summary = std::fs::read_to_string(out.path().join(SUMMARY_FILE)).map_err(|e| e.to_string())?;
        let bytes: Vec<String> = records
            .iter()
            .map(|r| serde_json::to_string(&r.without_timings()).unwrap())
            .collect();
        Ok((records, bytes.join("\n") + &summary))
    };
    let (first, a) = replay_once()?;
    let (_, b) = replay_once()?;
    ensure!(first.iter().all(|r| r.status == RunStatus::Completed), "a replayed run failed");
    ensure!(a == b, "replayed records differ");
    Ok(format!("{} runs byte-identical across two replays", first.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("validator oracle equivalence", validator_oracle),
        ("feedback fidelity", feedback_fidelity),
        ("pipeline protocol (replayed)", pipeline_protocol),
        ("ablation switches", ablations),
        ("executor limits", executor_limits),
        ("4-ordering rule", ordering_rule),
        ("oracle optimality", oracle_optimality),
        ("determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(msg)
        });
        match result {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("acceptance: {}/{} passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
