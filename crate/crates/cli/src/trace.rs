//! Drives the external tracer: `tracer --problem-dir <dir> --out <trace.json> [--timeout N]`.

use std::io;
use std::path::Path;
use std::process::{Command, Stdio};

use execlens_core::corpus::{load_benchmark, Problem};
use execlens_core::dynamics::{read_trace, trace_path, ExitStatus};
use execlens_core::scoring::outputs_agree;
use rayon::prelude::*;

use crate::config::{pick, pick_list};
use crate::{thread_pool, Fail, Globals, TraceArgs, EXIT_MISSING_DATA, EXIT_NO_TRACER};

pub const DEFAULT_TRACER: &str = "tracer";

#[derive(Debug, Default)]
pub struct TraceSummary {
    pub traced: usize,
    pub skipped: usize,
    /// Tracer failures and unreadable traces.
    pub failed: Vec<(String, String)>,
    /// Traces whose program raised or timed out; these are data, not errors.
    pub abnormal: Vec<(String, ExitStatus)>,
    pub output_mismatch: Vec<String>,
}

/// True when `tracer` names an existing file or an entry on PATH.
pub fn tracer_available(tracer: &str) -> bool {
    let path = Path::new(tracer);
    if path.components().count() > 1 {
        return path.is_file();
    }
    std::env::var_os("PATH")
        .map(|dirs| std::env::split_paths(&dirs).any(|d| d.join(tracer).is_file()))
        .unwrap_or(false)
}

fn missing_tracer(tracer: &str) -> Fail {
    Fail::new(
        EXIT_NO_TRACER,
        format!("tracer harness `{tracer}` not found; install it or pass --tracer"),
    )
}

enum Traced {
    Skipped,
    Done(Result<(ExitStatus, bool), String>),
}

fn trace_one(
    tracer: &str,
    root: &Path,
    problem: &Problem,
    timeout: Option<u64>,
    force: bool,
) -> io::Result<Traced> {
    let out = trace_path(root, &problem.benchmark_id, &problem.problem_id);
    if out.exists() && !force {
        return Ok(Traced::Skipped);
    }
    if let Some(parent) = out.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let dir = root
        .join("dataset")
        .join(&problem.benchmark_id)
        .join(&problem.problem_id);
    let mut cmd = Command::new(tracer);
    cmd.arg("--problem-dir").arg(&dir).arg("--out").arg(&out);
    if let Some(t) = timeout {
        cmd.arg("--timeout").arg(t.to_string());
    }
    log::debug!("{cmd:?}");
    let output = cmd
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .output()?;
    if !output.status.success() {
        let stderr = String::from_utf8_lossy(&output.stderr);
        let last = stderr.lines().last().unwrap_or("").trim();
        return Ok(Traced::Done(Err(format!(
            "tracer exited with {}: {last}",
            output.status
        ))));
    }
    Ok(Traced::Done(match read_trace(&out) {
        Ok(trace) => {
            let agrees = trace.exit_status != ExitStatus::Ok
                || outputs_agree(&problem.expected_output, &trace.stdout);
            Ok((trace.exit_status, agrees))
        }
        Err(e) => Err(e.to_string()),
    }))
}

/// Traces every problem lacking a trace file (all of them with `force`).
/// Fails only when the tracer cannot be started.
pub fn trace_problems(
    tracer: &str,
    root: &Path,
    problems: &[Problem],
    timeout: Option<u64>,
    force: bool,
    pool: &rayon::ThreadPool,
) -> Result<TraceSummary, Fail> {
    if !tracer_available(tracer) {
        return Err(missing_tracer(tracer));
    }
    let results: Vec<io::Result<Traced>> = pool.install(|| {
        problems
            .par_iter()
            .map(|p| trace_one(tracer, root, p, timeout, force))
            .collect()
    });
    let mut summary = TraceSummary::default();
    for (problem, result) in problems.iter().zip(results) {
        let id = format!("{}/{}", problem.benchmark_id, problem.problem_id);
        match result {
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(missing_tracer(tracer));
            }
            Err(e) => summary.failed.push((id, e.to_string())),
            Ok(Traced::Skipped) => summary.skipped += 1,
            Ok(Traced::Done(Err(e))) => summary.failed.push((id, e)),
            Ok(Traced::Done(Ok((status, agrees)))) => {
                summary.traced += 1;
                if status != ExitStatus::Ok {
                    summary.abnormal.push((id.clone(), status));
                }
                if !agrees {
                    summary.output_mismatch.push(id);
                }
            }
        }
    }
    Ok(summary)
}

pub fn print_summary(summary: &TraceSummary) {
    println!(
        "traced {}, skipped {} existing, {} failed, {} abnormal exits",
        summary.traced,
        summary.skipped,
        summary.failed.len(),
        summary.abnormal.len()
    );
    for (id, why) in &summary.failed {
        println!("  failed   {id}: {why}");
    }
    for (id, status) in &summary.abnormal {
        println!("  {:<8} {id}", format!("{status:?}").to_lowercase());
    }
    for id in &summary.output_mismatch {
        println!("  mismatch {id}: stdout differs from output.txt");
    }
}

pub fn run(args: TraceArgs, globals: &Globals) -> Result<(), Fail> {
    let config = &globals.config;
    let datasets = pick_list(args.datasets, config, "datasets");
    if datasets.is_empty() {
        return Err(Fail::usage("no datasets given (use --datasets)"));
    }
    let tracer =
        pick(args.tracer, config, "tracer", DEFAULT_TRACER.to_string()).map_err(Fail::usage)?;
    let timeout = match args.timeout {
        Some(t) => Some(t),
        None => config.get("timeout").map_err(Fail::usage)?,
    };
    let jobs = match args.jobs {
        Some(j) => Some(j),
        None => config.get("jobs").map_err(Fail::usage)?,
    };
    let pool = thread_pool(jobs)?;
    for dataset in &datasets {
        let problems = load_benchmark(&globals.root.join("dataset"), dataset)
            .map_err(|e| Fail::new(EXIT_MISSING_DATA, e.to_string()))?;
        let summary = trace_problems(
            &tracer,
            &globals.root,
            &problems,
            timeout,
            args.force,
            &pool,
        )?;
        print!("{dataset}: ");
        print_summary(&summary);
    }
    Ok(())
}
