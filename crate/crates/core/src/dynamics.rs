//! Loop and recursion measurements from execution traces.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{Node, Slot, SyntaxTree};

pub const TRACE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("cannot read trace {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed trace: {0}")]
    Malformed(String),
    #[error("unsupported trace version {0} (expected {TRACE_VERSION})")]
    UnsupportedVersion(u32),
    #[error("trace line {0} lies outside every statement of the program")]
    TraceTreeMismatch(u32),
    #[error("unbalanced call events for `{0}`")]
    UnbalancedCalls(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExitStatus {
    Ok,
    Exception,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CallEventKind {
    Enter,
    Exit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallEvent {
    pub function: String,
    pub event: CallEventKind,
    pub order: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub version: u32,
    pub problem_id: String,
    /// Keyed by line number; written as decimal-string keys.
    pub line_hits: BTreeMap<u32, u64>,
    pub call_events: Vec<CallEvent>,
    pub stdout: String,
    pub exit_status: ExitStatus,
}

impl TraceRecord {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("trace serializes");
        text.push('\n');
        text
    }
}

pub fn parse_trace(text: &str) -> Result<TraceRecord, DynamicsError> {
    // Check the version before the full schema so newer layouts get a clear error.
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| DynamicsError::Malformed(e.to_string()))?;
    let version = value
        .get("version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| DynamicsError::Malformed("missing `version`".into()))?;
    if version != u64::from(TRACE_VERSION) {
        return Err(DynamicsError::UnsupportedVersion(version as u32));
    }
    serde_json::from_value(value).map_err(|e| DynamicsError::Malformed(e.to_string()))
}

pub fn read_trace(path: &Path) -> Result<TraceRecord, DynamicsError> {
    let text = fs::read_to_string(path).map_err(|source| DynamicsError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_trace(&text)
}

/// `Experiment_Results/traces/<benchmark>/<problem_id>.json`
pub fn trace_path(root: &Path, benchmark_id: &str, problem_id: &str) -> PathBuf {
    root.join("Experiment_Results")
        .join("traces")
        .join(benchmark_id)
        .join(format!("{problem_id}.json"))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoopAggregate {
    #[default]
    Max,
    Sum,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DynamicProfile {
    /// Loop header line to total body entries.
    pub loop_iterations: BTreeMap<u32, u64>,
    pub program_loop_length: u64,
    pub recursion_depth: BTreeMap<String, u32>,
    pub total_calls: BTreeMap<String, u64>,
    pub exit_status: ExitStatus,
    /// The run did not finish normally; counts cover only what executed.
    pub partial: bool,
}

pub fn profile_from_trace(
    trace: &TraceRecord,
    tree: &SyntaxTree,
) -> Result<DynamicProfile, DynamicsError> {
    profile_with(trace, tree, LoopAggregate::Max)
}

pub fn profile_with(
    trace: &TraceRecord,
    tree: &SyntaxTree,
    aggregate: LoopAggregate,
) -> Result<DynamicProfile, DynamicsError> {
    for &line in trace.line_hits.keys() {
        if !tree.statements().any(|s| s.lines.contains(line)) {
            return Err(DynamicsError::TraceTreeMismatch(line));
        }
    }
    let partial = trace.exit_status != ExitStatus::Ok;

    let hits = |line: u32| trace.line_hits.get(&line).copied().unwrap_or(0);
    let mut loop_iterations = BTreeMap::new();
    for node in tree.nodes().filter(|n| n.kind.is_loop()) {
        loop_iterations.insert(node.lines.start, body_entries(node, &hits));
    }
    let program_loop_length = match aggregate {
        LoopAggregate::Max => loop_iterations.values().copied().max().unwrap_or(0),
        LoopAggregate::Sum => loop_iterations.values().sum(),
    };

    let (recursion_depth, total_calls) = replay_calls(&trace.call_events, partial)?;
    Ok(DynamicProfile {
        loop_iterations,
        program_loop_length,
        recursion_depth,
        total_calls,
        exit_status: trace.exit_status,
        partial,
    })
}

fn body_entries(node: &Node, hits: &impl Fn(u32) -> u64) -> u64 {
    let header = node.lines.start;
    match node.block(Slot::Body).next() {
        Some(first) if !first.kind.is_loop() && first.lines.start != header => {
            hits(first.lines.start)
        }
        // Body shares the header line or starts with another loop header.
        _ => hits(header).saturating_sub(1),
    }
}

type CallCounts = (BTreeMap<String, u32>, BTreeMap<String, u64>);

/// Replays enter/exit events in order. Synthetic frames (`<module>`, `<lambda>`, ...) are skipped.
pub fn replay_calls(events: &[CallEvent], partial: bool) -> Result<CallCounts, DynamicsError> {
    let mut ordered: Vec<&CallEvent> = events
        .iter()
        .filter(|e| !e.function.starts_with('<'))
        .collect();
    ordered.sort_by_key(|e| e.order);
    let mut active: BTreeMap<&str, u32> = BTreeMap::new();
    let mut depth = BTreeMap::new();
    let mut total = BTreeMap::new();
    for e in ordered {
        let live = active.entry(e.function.as_str()).or_insert(0);
        match e.event {
            CallEventKind::Enter => {
                *live += 1;
                let d = depth.entry(e.function.clone()).or_insert(0);
                *d = (*d).max(*live);
                *total.entry(e.function.clone()).or_insert(0) += 1;
            }
            CallEventKind::Exit => {
                if *live == 0 {
                    return Err(DynamicsError::UnbalancedCalls(e.function.clone()));
                }
                *live -= 1;
            }
        }
    }
    if !partial {
        if let Some((name, _)) = active.iter().find(|(_, n)| **n > 0) {
            return Err(DynamicsError::UnbalancedCalls(name.to_string()));
        }
    }
    Ok((depth, total))
}
