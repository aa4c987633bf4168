//! Benchmark folders and model result files.
//!
//! Layout: `dataset/<benchmark>/<problem_id>/{main.py,input.txt,output.txt}` and
//! `Experiment_Results/ER/result_stat/{MODEL}_{DATASET}.json`.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SOURCE_FILE: &str = "main.py";
pub const INPUT_FILE: &str = "input.txt";
pub const OUTPUT_FILE: &str = "output.txt";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("cannot read {}: {source}", .path.display())]
    UnreadableSource {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("empty program source: {}", .0.display())]
    EmptySource(PathBuf),
    #[error("malformed JSON in {}: {message}", .path.display())]
    MalformedJson { path: PathBuf, message: String },
    #[error("file name `{0}` does not match {{MODEL}}_{{DATASET}}.json")]
    FilenamePatternMismatch(String),
    #[error("cannot merge result sets for different models or benchmarks: {0}")]
    MixedModelIds(String),
    #[error("nothing to merge")]
    EmptyMerge,
    #[error("cannot write {}: {source}", .path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Problem {
    pub benchmark_id: String,
    pub problem_id: String,
    pub source: String,
    pub input_text: String,
    pub expected_output: String,
}

/// Identifies a program across benchmarks.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ProgramKey {
    pub benchmark: String,
    pub problem: String,
}

impl ProgramKey {
    pub fn new(benchmark: impl Into<String>, problem: impl Into<String>) -> Self {
        ProgramKey {
            benchmark: benchmark.into(),
            problem: problem.into(),
        }
    }
}

impl Problem {
    pub fn key(&self) -> ProgramKey {
        ProgramKey::new(&self.benchmark_id, &self.problem_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    #[serde(skip)]
    pub problem_id: String,
    pub predicted_output: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning: Option<String>,
    /// As found on disk. Never used for scoring.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_template: Option<String>,
}

impl PredictionRecord {
    pub fn new(problem_id: impl Into<String>, predicted_output: impl Into<String>) -> Self {
        PredictionRecord {
            problem_id: problem_id.into(),
            predicted_output: predicted_output.into(),
            reasoning: None,
            correct: None,
            prompt_template: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResultSet {
    pub model_id: String,
    pub benchmark_id: String,
    pub records: BTreeMap<String, PredictionRecord>,
}

impl ResultSet {
    pub fn new(model_id: impl Into<String>, benchmark_id: impl Into<String>) -> Self {
        ResultSet {
            model_id: model_id.into(),
            benchmark_id: benchmark_id.into(),
            records: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, record: PredictionRecord) {
        self.records.insert(record.problem_id.clone(), record);
    }

    /// Record ids with no matching problem in the benchmark.
    pub fn unknown_problems(&self, problems: &[Problem]) -> Vec<String> {
        self.records
            .keys()
            .filter(|id| !problems.iter().any(|p| &p.problem_id == *id))
            .cloned()
            .collect()
    }

    pub fn file_name(&self) -> String {
        format!("{}_{}.json", self.model_id, self.benchmark_id)
    }

    /// Pretty JSON keyed by problem id, in id order.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.records).expect("records serialize");
        text.push('\n');
        text
    }
}

pub fn results_dir(root: &Path) -> PathBuf {
    root.join("Experiment_Results")
        .join("ER")
        .join("result_stat")
}

/// Hub-style model ids (`org/name`) are flattened with `_`.
pub fn results_path(root: &Path, model_id: &str, benchmark_id: &str) -> PathBuf {
    results_dir(root).join(format!(
        "{}_{benchmark_id}.json",
        model_id.replace('/', "_")
    ))
}

fn read_text(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| {
        if source.kind() == io::ErrorKind::NotFound {
            CorpusError::MissingFile(path.to_path_buf())
        } else {
            CorpusError::UnreadableSource {
                path: path.to_path_buf(),
                source,
            }
        }
    })
}

/// One problem per child directory of `root/benchmark_id`, sorted by id.
pub fn load_benchmark(root: &Path, benchmark_id: &str) -> Result<Vec<Problem>, CorpusError> {
    let dir = root.join(benchmark_id);
    if !dir.is_dir() {
        return Err(CorpusError::MissingFile(dir));
    }
    let entries = fs::read_dir(&dir).map_err(|source| CorpusError::UnreadableSource {
        path: dir.clone(),
        source,
    })?;
    let mut folders = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| CorpusError::UnreadableSource {
            path: dir.clone(),
            source,
        })?;
        if entry.path().is_dir() {
            folders.push(entry.path());
        }
    }
    folders.sort();
    folders
        .into_iter()
        .map(|f| load_problem(&f, benchmark_id))
        .collect()
}

pub fn load_problem(folder: &Path, benchmark_id: &str) -> Result<Problem, CorpusError> {
    let source_path = folder.join(SOURCE_FILE);
    let source = read_text(&source_path)?;
    if source.trim().is_empty() {
        return Err(CorpusError::EmptySource(source_path));
    }
    let input_text = match read_text(&folder.join(INPUT_FILE)) {
        Err(CorpusError::MissingFile(_)) => String::new(),
        other => other?,
    };
    let expected_output = read_text(&folder.join(OUTPUT_FILE))?;
    Ok(Problem {
        benchmark_id: benchmark_id.to_string(),
        problem_id: folder
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        source,
        input_text,
        expected_output,
    })
}

/// Writes a problem folder under `root/<benchmark>/<problem_id>`.
pub fn save_problem(root: &Path, problem: &Problem) -> Result<(), CorpusError> {
    let folder = root.join(&problem.benchmark_id).join(&problem.problem_id);
    let write = |name: &str, text: &str| {
        let path = folder.join(name);
        fs::write(&path, text).map_err(|source| CorpusError::Write { path, source })
    };
    fs::create_dir_all(&folder).map_err(|source| CorpusError::Write {
        path: folder.clone(),
        source,
    })?;
    write(SOURCE_FILE, &problem.source)?;
    write(INPUT_FILE, &problem.input_text)?;
    write(OUTPUT_FILE, &problem.expected_output)
}

/// Splits `{MODEL}_{DATASET}.json` at the last underscore.
pub fn parse_results_filename(name: &str) -> Result<(String, String), CorpusError> {
    let mismatch = || CorpusError::FilenamePatternMismatch(name.to_string());
    let stem = name.strip_suffix(".json").ok_or_else(mismatch)?;
    let (model, dataset) = stem.rsplit_once('_').ok_or_else(mismatch)?;
    if model.is_empty() || dataset.is_empty() {
        return Err(mismatch());
    }
    Ok((model.to_string(), dataset.to_string()))
}

pub fn load_results(path: &Path) -> Result<ResultSet, CorpusError> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let (model_id, benchmark_id) = parse_results_filename(&name)?;
    let text = read_text(path)?;
    parse_results(&text, &model_id, &benchmark_id).map_err(|message| CorpusError::MalformedJson {
        path: path.to_path_buf(),
        message,
    })
}

pub fn parse_results(text: &str, model_id: &str, benchmark_id: &str) -> Result<ResultSet, String> {
    let raw: BTreeMap<String, PredictionRecord> =
        serde_json::from_str(text).map_err(|e| e.to_string())?;
    let mut set = ResultSet::new(model_id, benchmark_id);
    for (id, mut record) in raw {
        record.problem_id = id;
        set.insert(record);
    }
    Ok(set)
}

/// Writes through a temporary file so readers never see a half-written set.
pub fn write_results(path: &Path, set: &ResultSet) -> Result<(), CorpusError> {
    let wrap = |source| CorpusError::Write {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(wrap)?;
    }
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, set.to_json()).map_err(wrap)?;
    fs::rename(&tmp, path).map_err(wrap)
}

/// Optimistic merge: per problem, the first record scored correct, else the first record seen.
///
/// `scores[i]` holds the correctness of `sets[i]`'s records; missing entries count as incorrect.
pub fn merge_results(
    sets: &[ResultSet],
    scores: &[BTreeMap<String, bool>],
) -> Result<ResultSet, CorpusError> {
    let first = sets.first().ok_or(CorpusError::EmptyMerge)?;
    if let Some(other) = sets
        .iter()
        .find(|s| s.model_id != first.model_id || s.benchmark_id != first.benchmark_id)
    {
        return Err(CorpusError::MixedModelIds(format!(
            "{}/{} vs {}/{}",
            first.model_id, first.benchmark_id, other.model_id, other.benchmark_id
        )));
    }
    let mut merged = ResultSet::new(&first.model_id, &first.benchmark_id);
    let mut won = BTreeMap::new();
    for (i, set) in sets.iter().enumerate() {
        for (id, record) in &set.records {
            let correct = scores
                .get(i)
                .and_then(|s| s.get(id))
                .copied()
                .unwrap_or(false);
            let have = won.get(id).copied();
            if have.is_none() || (have == Some(false) && correct) {
                merged.records.insert(id.clone(), record.clone());
                won.insert(id.clone(), correct);
            }
        }
    }
    Ok(merged)
}
