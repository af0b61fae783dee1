//! Runs generated programs in single-use worker processes.
//!
//! Host to worker: one JSON line on stdin,
//! `{"source": str, "objects": [[name, type]...], "init": [[pred, arg...]...],
//! "goal": [[sign, pred, arg...]...]}`. Worker to host: exactly one JSON line
//! on stdout, `{"status":"ok","plan":[str...]}`, `{"status":"error","traceback":str}`
//! or `{"status":"badtype","repr":str}`.

use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::sync::OnceLock;
use std::thread;
use std::time::{Duration, Instant};

use regex::Regex;
use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::encoding::TaskEncoding;
use crate::feedback::ProgramOutcome;
use crate::pddl::Task;
use crate::validator::{plan_from_lines, validate_plan};

pub const WORKER_ENV: &str = "GENPLAN_WORKER";
const STDERR_TAIL: usize = 4000;

#[derive(Debug, Error)]
pub enum ExecutorError {
    #[error("failed to start worker `{command}`: {source}")]
    WorkerSpawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("no worker configured; pass a worker command or set {WORKER_ENV}")]
    NoWorker,
}

/// Command line that starts one worker process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkerCommand {
    pub program: String,
    pub args: Vec<String>,
}

impl WorkerCommand {
    pub fn new(program: impl Into<String>, args: impl IntoIterator<Item = impl Into<String>>) -> Self {
        WorkerCommand {
            program: program.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    /// Whitespace-separated command line, e.g. `python3 plan_shim.py`.
    pub fn parse(line: &str) -> Option<Self> {
        let mut parts = line.split_whitespace();
        let program = parts.next()?;
        Some(WorkerCommand::new(program, parts))
    }

    pub fn from_env() -> Result<Self, ExecutorError> {
        std::env::var(WORKER_ENV)
            .ok()
            .and_then(|v| WorkerCommand::parse(&v))
            .ok_or(ExecutorError::NoWorker)
    }

    fn display(&self) -> String {
        std::iter::once(self.program.as_str())
            .chain(self.args.iter().map(String::as_str))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// One finished execution.
#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub outcome: ProgramOutcome,
    /// From sending the request to receiving the reply (or the kill).
    pub wall_time: Duration,
}

#[derive(Debug, Clone)]
pub struct Executor {
    worker: WorkerCommand,
    /// Upper bound on simultaneously running workers in [`Executor::run_batch`].
    pub max_workers: usize,
}

/// Input for one execution in a batch.
pub struct Job<'a> {
    pub source: &'a str,
    pub encoding: &'a TaskEncoding,
    pub task: &'a Task,
}

#[derive(Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
enum Reply {
    Ok { plan: Value },
    Error { traceback: String },
    Badtype { repr: String },
}

pub fn wire_request(source: &str, encoding: &TaskEncoding) -> String {
    let goal: Vec<Value> = encoding
        .goal
        .iter()
        .map(|g| {
            let mut row = vec![Value::Bool(g.positive)];
            row.extend(g.fact.iter().map(|s| Value::String(s.clone())));
            Value::Array(row)
        })
        .collect();
    let objects: Vec<[&str; 2]> = encoding.objects.iter().map(|(n, t)| [n.as_str(), t.as_str()]).collect();
    json!({
        "source": source,
        "objects": objects,
        "init": encoding.init,
        "goal": goal,
    })
    .to_string()
}

fn path_patterns() -> &'static [Regex] {
    static PATTERNS: OnceLock<Vec<Regex>> = OnceLock::new();
    PATTERNS.get_or_init(|| {
        [
            // `File "/x/y.py", ` in traceback frame headers
            r#"File "[^"]*",\s*"#,
            // Windows drive paths
            r#"\b[A-Za-z]:[\\/][^\s"',:;()]*"#,
            // absolute and home-relative paths
            r#"(?:^|[\s"'(\[=<])(?:~|\.{1,2})?/[^\s"',:;()\]>]+"#,
            // relative paths with at least one separator and a file extension
            r#"\b[\w.\-]+(?:/[\w.\-]+)+\.[A-Za-z]\w*\b"#,
        ]
        .iter()
        .map(|p| Regex::new(p).unwrap())
        .collect()
    })
}

/// Remove every file-system path from a traceback.
pub fn strip_paths(traceback: &str) -> String {
    let mut out = traceback.to_string();
    for (i, re) in path_patterns().iter().enumerate() {
        out = match i {
            0 => re.replace_all(&out, "").into_owned(),
            // keep the delimiter captured before the path
            2 => re
                .replace_all(&out, |c: &regex::Captures<'_>| {
                    let m = &c[0];
                    match m.chars().next() {
                        Some(ch) if !matches!(ch, '/' | '~' | '.') => format!("{ch}<path>"),
                        _ => "<path>".to_string(),
                    }
                })
                .into_owned(),
            _ => re.replace_all(&out, "<path>").into_owned(),
        };
    }
    out
}

fn classify(reply_line: &str, task: &Task) -> ProgramOutcome {
    match serde_json::from_str::<Reply>(reply_line) {
        Ok(Reply::Ok { plan }) => {
            let steps: Option<Vec<String>> = plan
                .as_array()
                .and_then(|a| a.iter().map(|v| v.as_str().map(|s| s.replace('\n', " "))).collect());
            match steps {
                Some(steps) => {
                    let validation = validate_plan(task, &plan_from_lines(steps.iter().map(String::as_str)));
                    ProgramOutcome::PlanProduced {
                        plan_text: steps.join("\n"),
                        validation,
                    }
                }
                None => ProgramOutcome::WrongOutputType { output_repr: plan.to_string() },
            }
        }
        Ok(Reply::Error { traceback }) => ProgramOutcome::RuntimeException {
            traceback: strip_paths(&traceback),
        },
        Ok(Reply::Badtype { repr }) => ProgramOutcome::WrongOutputType { output_repr: repr },
        Err(e) => ProgramOutcome::RuntimeException {
            traceback: strip_paths(&format!("worker sent an invalid reply ({e}): {reply_line}")),
        },
    }
}

fn kill(child: &mut Child) {
    let _ = child.kill();
    let _ = child.wait();
}

impl Executor {
    pub fn new(worker: WorkerCommand) -> Self {
        let max_workers = thread::available_parallelism().map_or(1, |n| n.get());
        Executor { worker, max_workers }
    }

    pub fn with_max_workers(mut self, n: usize) -> Self {
        self.max_workers = n.max(1);
        self
    }

    pub fn worker(&self) -> &WorkerCommand {
        &self.worker
    }

    /// Run `source` on one task under a wall-clock limit.
    pub fn run_generalized_plan(
        &self,
        source: &str,
        encoding: &TaskEncoding,
        task: &Task,
        limit: Duration,
    ) -> Result<ProgramOutcome, ExecutorError> {
        self.execute(source, encoding, task, limit).map(|e| e.outcome)
    }

    pub fn execute(
        &self,
        source: &str,
        encoding: &TaskEncoding,
        task: &Task,
        limit: Duration,
    ) -> Result<Execution, ExecutorError> {
        let mut child = Command::new(&self.worker.program)
            .args(&self.worker.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|source| ExecutorError::WorkerSpawn {
                command: self.worker.display(),
                source,
            })?;

        let stdout = child.stdout.take().expect("piped stdout");
        let mut stderr = child.stderr.take().expect("piped stderr");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut line = String::new();
            let read = BufReader::new(stdout).read_line(&mut line);
            let _ = tx.send(read.map(|_| line));
        });
        let stderr_reader = thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stderr.read_to_end(&mut buf);
            let text = String::from_utf8_lossy(&buf).into_owned();
            let start = text.len().saturating_sub(STDERR_TAIL);
            let start = (start..=text.len()).find(|&i| text.is_char_boundary(i)).unwrap_or(0);
            text[start..].to_string()
        });

        let started = Instant::now();
        let request = wire_request(source, encoding);
        if let Some(mut stdin) = child.stdin.take() {
            // A worker that exits early closes the pipe; its reply (or lack of
            // one) is classified below.
            let _ = stdin.write_all(request.as_bytes());
            let _ = stdin.write_all(b"\n");
        }

        let received = rx.recv_timeout(limit);
        let wall_time = started.elapsed();
        let outcome = match received {
            Err(mpsc::RecvTimeoutError::Timeout) => {
                kill(&mut child);
                ProgramOutcome::Timeout {
                    limit_seconds: limit.as_secs_f64(),
                }
            }
            Ok(Ok(line)) if !line.trim().is_empty() => {
                kill(&mut child);
                classify(line.trim_end(), task)
            }
            _ => {
                let status = child.wait().ok();
                let tail = stderr_reader.join().unwrap_or_default();
                let status = status.map_or_else(|| "unknown status".to_string(), |s| s.to_string());
                ProgramOutcome::RuntimeException {
                    traceback: strip_paths(&format!("worker exited ({status}) without a reply\n{}", tail.trim_end())),
                }
            }
        };
        Ok(Execution { outcome, wall_time })
    }

    /// Run jobs with at most `max_workers` workers alive at once. Results are
    /// in job order.
    pub fn run_batch(&self, jobs: &[Job<'_>], limit: Duration) -> Vec<Result<Execution, ExecutorError>> {
        let next = AtomicUsize::new(0);
        let (tx, rx) = mpsc::channel();
        thread::scope(|scope| {
            for _ in 0..self.max_workers.min(jobs.len()) {
                let (tx, next) = (tx.clone(), &next);
                scope.spawn(move || loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(job) = jobs.get(i) else { break };
                    let _ = tx.send((i, self.execute(job.source, job.encoding, job.task, limit)));
                });
            }
        });
        drop(tx);
        let mut done: Vec<_> = rx.into_iter().collect();
        done.sort_by_key(|(i, _)| *i);
        done.into_iter().map(|(_, r)| r).collect()
    }
}
