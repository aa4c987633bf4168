//! Batch collection of predictions over a corpus, resumable from the output file.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Mutex};
use std::time::{Duration, Instant};

use execlens_core::corpus::{
    parse_results, write_results, CorpusError, PredictionRecord, Problem, ResultSet,
};
use execlens_core::scoring::{extract_answer, ANSWER_MARKER};
use thiserror::Error;

use crate::prompt::{build_prompt, PROMPT_TEMPLATE_VERSION};
use crate::provider::{GatewayError, Provider};

#[derive(Debug, Error)]
pub enum CollectError {
    #[error(transparent)]
    Provider(#[from] GatewayError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("no problems to collect")]
    EmptyCorpus,
    #[error("problems span several benchmarks: {0:?}")]
    MixedBenchmarks(Vec<String>),
    #[error("existing result file {path} is unreadable: {reason}")]
    Resume { path: String, reason: String },
}

#[derive(Debug, Clone)]
pub struct CollectOptions {
    pub concurrency: usize,
    /// Minimum spacing between request starts.
    pub min_interval: Option<Duration>,
}

impl Default for CollectOptions {
    fn default() -> Self {
        CollectOptions {
            concurrency: 4,
            min_interval: None,
        }
    }
}

#[derive(Debug)]
pub struct CollectSummary {
    pub set: ResultSet,
    pub reused: usize,
    pub queried: usize,
    pub failures: Vec<(String, String)>,
}

/// Splits a response into reasoning (before the last marker) and the answer.
pub fn split_response(response: &str) -> (String, String) {
    let reasoning = match response.rfind(ANSWER_MARKER) {
        Some(i) => response[..i].trim(),
        None => "",
    };
    (reasoning.to_string(), extract_answer(response).to_string())
}

fn is_failed(record: &PredictionRecord) -> bool {
    record.reasoning.is_none() && record.predicted_output.is_empty()
}

fn record_for(problem_id: &str, response: Result<String, GatewayError>) -> PredictionRecord {
    let mut record = match response {
        Ok(text) => {
            let (reasoning, answer) = split_response(&text);
            let mut r = PredictionRecord::new(problem_id, answer);
            r.reasoning = Some(reasoning);
            r
        }
        Err(_) => PredictionRecord::new(problem_id, ""),
    };
    record.prompt_template = Some(PROMPT_TEMPLATE_VERSION.to_string());
    record
}

/// Queries the provider for every problem not already answered in `out_path`
/// and persists the set after each response. Per-problem failures become empty
/// predictions and are retried on the next run.
pub fn collect_predictions(
    provider: &Provider,
    problems: &[Problem],
    out_path: &Path,
    options: &CollectOptions,
) -> Result<CollectSummary, CollectError> {
    let benchmarks: BTreeSet<&str> = problems.iter().map(|p| p.benchmark_id.as_str()).collect();
    let benchmark = match benchmarks.len() {
        0 => return Err(CollectError::EmptyCorpus),
        1 => *benchmarks.iter().next().unwrap(),
        _ => {
            return Err(CollectError::MixedBenchmarks(
                benchmarks.iter().map(|s| s.to_string()).collect(),
            ))
        }
    };
    provider.check_ready()?;
    let model = &provider.config().model_id;

    let mut set = match std::fs::read_to_string(out_path) {
        Ok(text) => {
            parse_results(&text, model, benchmark).map_err(|reason| CollectError::Resume {
                path: out_path.display().to_string(),
                reason,
            })?
        }
        Err(_) => ResultSet::new(model.clone(), benchmark),
    };
    let todo: Vec<&Problem> = problems
        .iter()
        .filter(|p| set.records.get(&p.problem_id).is_none_or(is_failed))
        .collect();
    let reused = problems.len() - todo.len();

    let mut failures = Vec::new();
    let next = AtomicUsize::new(0);
    let slot = Mutex::new(Instant::now());
    let workers = options.concurrency.clamp(1, todo.len().max(1));
    std::thread::scope(|scope| -> Result<(), CollectError> {
        let (tx, rx) = mpsc::channel();
        for _ in 0..workers {
            let tx = tx.clone();
            let (todo, next, slot) = (&todo, &next, &slot);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(problem) = todo.get(i) else { break };
                if let Some(gap) = options.min_interval {
                    let mut at = slot.lock().unwrap();
                    let now = Instant::now();
                    if *at > now {
                        std::thread::sleep(*at - now);
                    }
                    *at = Instant::now() + gap;
                }
                let response = provider.query(&build_prompt(problem));
                if tx.send((problem.problem_id.clone(), response)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        // Single writer: only this thread touches the result file.
        for (id, response) in rx {
            if let Err(e) = &response {
                log::warn!("{id}: {e}");
                failures.push((id.clone(), e.to_string()));
            }
            set.insert(record_for(&id, response));
            if let Err(e) = write_results(out_path, &set) {
                next.store(usize::MAX / 2, Ordering::SeqCst);
                return Err(e.into());
            }
        }
        Ok(())
    })?;
    if todo.is_empty() && !out_path.exists() {
        write_results(out_path, &set)?;
    }
    failures.sort();
    Ok(CollectSummary {
        set,
        reused,
        queried: todo.len(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn answer_follows_last_marker() {
        let (reasoning, answer) = split_response("Example: [Output]\n1\nNow ours.\n[Output]\n84");
        assert_eq!(answer, "84");
        assert_eq!(reasoning, "Example: [Output]\n1\nNow ours.");
    }

    #[test]
    fn missing_marker_keeps_whole_response() {
        assert_eq!(split_response("  84\n"), (String::new(), "84".to_string()));
        assert_eq!(split_response("it prints 84").1, "it prints 84");
    }

    #[test]
    fn failures_are_empty_and_retried() {
        let failed = record_for("p", Err(GatewayError::Timeout));
        assert_eq!(failed.predicted_output, "");
        assert!(is_failed(&failed));
        let ok = record_for("p", Ok("[Output]\n".into()));
        assert!(!is_failed(&ok));
        assert_eq!(ok.prompt_template.as_deref(), Some(PROMPT_TEMPLATE_VERSION));
    }
}
