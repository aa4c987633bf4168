//! Glue from loaded problems, traces and result sets to report inputs.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::cfg::complexity_profile;
use crate::constructs::tag_constructs;
use crate::corpus::{PredictionRecord, Problem, ProgramKey, ResultSet};
use crate::dynamics::{profile_with, DynamicProfile, DynamicsError, LoopAggregate, TraceRecord};
use crate::report::ProgramFacts;
use crate::scoring::{score_prediction, Outcome};
use crate::syntax::{parse_program, ParseError};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{}/{}: {source}", .key.benchmark, .key.problem)]
    Parse {
        key: ProgramKey,
        #[source]
        source: ParseError,
    },
    #[error("{}/{}: {source}", .key.benchmark, .key.problem)]
    Trace {
        key: ProgramKey,
        #[source]
        source: DynamicsError,
    },
}

#[derive(Debug, Clone)]
pub struct AnalyzedProgram {
    pub facts: ProgramFacts,
    pub dynamic: Option<DynamicProfile>,
}

/// Static metrics, plus loop length when a trace is given. Partial traces
/// yield a profile but no loop length.
pub fn analyze_program(
    problem: &Problem,
    trace: Option<&TraceRecord>,
    aggregate: LoopAggregate,
) -> Result<AnalyzedProgram, AnalysisError> {
    let key = problem.key();
    let tree = parse_program(&problem.source).map_err(|source| AnalysisError::Parse {
        key: key.clone(),
        source,
    })?;
    let dynamic = trace
        .map(|t| profile_with(t, &tree, aggregate))
        .transpose()
        .map_err(|source| AnalysisError::Trace {
            key: key.clone(),
            source,
        })?;
    Ok(AnalyzedProgram {
        facts: ProgramFacts {
            key,
            tags: tag_constructs(&tree),
            complexity: complexity_profile(&tree, &problem.source),
            loop_length: dynamic
                .as_ref()
                .filter(|d| !d.partial)
                .map(|d| d.program_loop_length),
        },
        dynamic,
    })
}

/// Scores every problem; a problem without a record counts as an empty prediction.
pub fn score_result_set(problems: &[Problem], set: &ResultSet) -> BTreeMap<ProgramKey, Outcome> {
    problems
        .iter()
        .map(|p| {
            let outcome = match set.records.get(&p.problem_id) {
                Some(record) => score_prediction(record, p),
                None => score_prediction(&PredictionRecord::new(&p.problem_id, ""), p),
            };
            (p.key(), outcome)
        })
        .collect()
}

/// Per-record correctness, as needed by the optimistic merge.
pub fn correctness(problems: &[Problem], set: &ResultSet) -> BTreeMap<String, bool> {
    set.records
        .iter()
        .filter_map(|(id, record)| {
            let problem = problems.iter().find(|p| &p.problem_id == id)?;
            Some((id.clone(), score_prediction(record, problem).correct))
        })
        .collect()
}
