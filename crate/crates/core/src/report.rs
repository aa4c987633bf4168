//! Per-cluster accuracy tables and bar charts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::cfg::ComplexityProfile;
use crate::constructs::{ConstructTag, ConstructTags};
use crate::corpus::ProgramKey;
use crate::scoring::{Outcome, ValueCategory};
use crate::stats::{correlate_buckets, correlate_property, Bucketing, Granularity};

pub const CANVAS_WIDTH: u32 = 900;
pub const CANVAS_HEIGHT: u32 = 420;
const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#9c755f",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    Constructs,
    Cyclomatic,
    Cognitive,
    Loc,
    LoopLength,
    Types,
}

impl ReportKind {
    pub const ALL: [ReportKind; 6] = [
        ReportKind::Constructs,
        ReportKind::Cyclomatic,
        ReportKind::Cognitive,
        ReportKind::Loc,
        ReportKind::LoopLength,
        ReportKind::Types,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReportKind::Constructs => "constructs",
            ReportKind::Cyclomatic => "cyclomatic",
            ReportKind::Cognitive => "cognitive",
            ReportKind::Loc => "loc",
            ReportKind::LoopLength => "loop_length",
            ReportKind::Types => "types",
        }
    }

    /// Folder under `Experiment_Results/figures/`.
    pub fn directory(self) -> &'static str {
        match self {
            ReportKind::Constructs => "constructs",
            ReportKind::Cyclomatic => "cyclomatic_complexity",
            ReportKind::Cognitive => "cognitive_complexity",
            ReportKind::Loc => "lines_of_code",
            ReportKind::LoopLength => "loop_length",
            ReportKind::Types => "types",
        }
    }

    fn title(self) -> &'static str {
        match self {
            ReportKind::Constructs => "Accuracy per construct",
            ReportKind::Cyclomatic => "Predictions by cyclomatic complexity",
            ReportKind::Cognitive => "Predictions by cognitive complexity",
            ReportKind::Loc => "Predictions by lines of code",
            ReportKind::LoopLength => "Predictions by loop length",
            ReportKind::Types => "Type match and value match per output type",
        }
    }
}

impl fmt::Display for ReportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Static and dynamic measurements of one program.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProgramFacts {
    pub key: ProgramKey,
    pub tags: ConstructTags,
    pub complexity: ComplexityProfile,
    /// Absent when no complete trace is available.
    pub loop_length: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelOutcomes {
    pub model_id: String,
    pub outcomes: BTreeMap<ProgramKey, Outcome>,
}

/// The `rho` column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rho {
    /// Report kind without a correlation.
    None,
    Degenerate,
    Value(f64),
}

impl Rho {
    fn cell(self) -> String {
        match self {
            Rho::None => String::new(),
            Rho::Degenerate => "n/a".to_string(),
            Rho::Value(v) => v.to_string(),
        }
    }
}

impl Serialize for Rho {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Rho::None => s.serialize_none(),
            Rho::Degenerate => s.serialize_str("n/a"),
            Rho::Value(v) => s.serialize_f64(*v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub kind: ReportKind,
    pub model: String,
    pub cluster: String,
    pub n: usize,
    pub n_correct: usize,
    /// Blank for an empty cluster.
    pub accuracy: Option<f64>,
    pub rho: Rho,
}

impl Row {
    fn new(
        kind: ReportKind,
        model: &str,
        cluster: &str,
        n: usize,
        n_correct: usize,
        rho: Rho,
    ) -> Self {
        Row {
            kind,
            model: model.to_string(),
            cluster: cluster.to_string(),
            n,
            n_correct,
            accuracy: (n > 0).then(|| n_correct as f64 / n as f64),
            rho,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub kind: ReportKind,
    /// `pooled`, or the benchmark a variant is restricted to.
    pub scope: String,
    pub models: Vec<String>,
    pub clusters: Vec<String>,
    pub granularity: Option<Granularity>,
    pub bucketing: Option<Bucketing>,
    pub rows: Vec<Row>,
    #[serde(skip)]
    pub chart: String,
}

pub const POOLED: &str = "pooled";

fn model_ids(models: &[ModelOutcomes]) -> Vec<String> {
    models.iter().map(|m| m.model_id.clone()).collect()
}

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

/// Accuracy per construct tag; a program counts once for each of its tags.
pub fn construct_report(facts: &[ProgramFacts], models: &[ModelOutcomes]) -> AnalysisReport {
    let kind = ReportKind::Constructs;
    let tags: BTreeSet<ConstructTag> = facts.iter().flat_map(|f| f.tags.iter()).collect();
    let mut rows = Vec::new();
    let mut chart = Chart::new(kind.title(), "accuracy", 1.0);
    chart.categories = tags.iter().map(|t| t.abbreviation().to_string()).collect();
    for (i, model) in models.iter().enumerate() {
        let mut series = BarSeries::new(&model.model_id, color(i));
        for &tag in &tags {
            let (n, c) = count(facts.iter().filter(|f| f.tags.contains(tag)), model);
            let row = Row::new(kind, &model.model_id, tag.abbreviation(), n, c, Rho::None);
            series.stacks.push(vec![(row.accuracy.unwrap_or(0.0), 1.0)]);
            rows.push(row);
        }
        chart.bars.push(series);
    }
    AnalysisReport {
        kind,
        scope: POOLED.to_string(),
        models: model_ids(models),
        clusters: tags.iter().map(|t| t.abbreviation().to_string()).collect(),
        granularity: None,
        bucketing: None,
        rows,
        chart: chart.render(),
    }
}

fn count<'a>(
    facts: impl Iterator<Item = &'a ProgramFacts>,
    model: &ModelOutcomes,
) -> (usize, usize) {
    let mut n = 0;
    let mut correct = 0;
    for f in facts {
        if let Some(o) = model.outcomes.get(&f.key) {
            n += 1;
            correct += usize::from(o.correct);
        }
    }
    (n, correct)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComplexityMetric {
    Loc,
    Cyclomatic,
    Cognitive,
}

impl ComplexityMetric {
    pub fn kind(self) -> ReportKind {
        match self {
            ComplexityMetric::Loc => ReportKind::Loc,
            ComplexityMetric::Cyclomatic => ReportKind::Cyclomatic,
            ComplexityMetric::Cognitive => ReportKind::Cognitive,
        }
    }

    pub fn default_bucketing(self) -> Bucketing {
        match self {
            ComplexityMetric::Loc => Bucketing::lines_of_code(),
            ComplexityMetric::Cyclomatic => Bucketing::cyclomatic(),
            ComplexityMetric::Cognitive => Bucketing::cognitive(),
        }
    }

    fn value(self, p: &ComplexityProfile) -> u32 {
        match self {
            ComplexityMetric::Loc => p.loc,
            ComplexityMetric::Cyclomatic => p.cyclomatic,
            ComplexityMetric::Cognitive => p.cognitive,
        }
    }
}

pub fn complexity_report(
    facts: &[ProgramFacts],
    models: &[ModelOutcomes],
    metric: ComplexityMetric,
    bucketing: &Bucketing,
    granularity: Granularity,
) -> AnalysisReport {
    let values = facts
        .iter()
        .map(|f| (f.key.clone(), f64::from(metric.value(&f.complexity))));
    bucketed_report(
        metric.kind(),
        values.collect(),
        models,
        bucketing,
        granularity,
    )
}

/// Programs without a complete trace are left out.
pub fn loop_report(
    facts: &[ProgramFacts],
    models: &[ModelOutcomes],
    bucketing: &Bucketing,
    granularity: Granularity,
) -> AnalysisReport {
    let values = facts
        .iter()
        .filter_map(|f| f.loop_length.map(|l| (f.key.clone(), l as f64)));
    bucketed_report(
        ReportKind::LoopLength,
        values.collect(),
        models,
        bucketing,
        granularity,
    )
}

fn bucketed_report(
    kind: ReportKind,
    values: BTreeMap<ProgramKey, f64>,
    models: &[ModelOutcomes],
    bucketing: &Bucketing,
    granularity: Granularity,
) -> AnalysisReport {
    let mut buckets: BTreeMap<usize, Vec<&ProgramKey>> = BTreeMap::new();
    for (key, v) in &values {
        buckets
            .entry(bucketing.bucket_of(*v))
            .or_default()
            .push(key);
    }
    let labels: Vec<String> = buckets
        .keys()
        .map(|&b| bucketing.label(b).to_string())
        .collect();

    let y_max = buckets.values().map(|v| v.len()).max().unwrap_or(1) as f64;
    let mut chart = Chart::new(kind.title(), "programs", nice_ceiling(y_max));
    chart.categories = labels.clone();
    chart.right_axis = Some("accuracy".to_string());

    let mut rows = Vec::new();
    for (i, model) in models.iter().enumerate() {
        let rho = model_rho(&values, model, bucketing, granularity);
        let mut bars = BarSeries::new(&model.model_id, color(i));
        let mut dots = DotSeries {
            name: model.model_id.clone(),
            color: color(i),
            points: Vec::new(),
        };
        for (b, keys) in &buckets {
            let (n, c) = keys
                .iter()
                .fold((0, 0), |(n, c), k| match model.outcomes.get(*k) {
                    Some(o) => (n + 1, c + usize::from(o.correct)),
                    None => (n, c),
                });
            let row = Row::new(kind, &model.model_id, bucketing.label(*b), n, c, rho);
            bars.stacks
                .push(vec![(c as f64, 1.0), ((n - c) as f64, 0.35)]);
            dots.points.push(row.accuracy);
            rows.push(row);
        }
        chart.notes.push(format!(
            "{}: rho = {} ({granularity}-level)",
            model.model_id,
            rho_text(rho)
        ));
        chart.bars.push(bars);
        chart.dots.push(dots);
    }
    AnalysisReport {
        kind,
        scope: POOLED.to_string(),
        models: model_ids(models),
        clusters: labels,
        granularity: Some(granularity),
        bucketing: Some(bucketing.clone()),
        rows,
        chart: chart.render(),
    }
}

fn rho_text(rho: Rho) -> String {
    match rho {
        Rho::Value(v) => format!("{v:.3}"),
        other => other.cell(),
    }
}

fn model_rho(
    values: &BTreeMap<ProgramKey, f64>,
    model: &ModelOutcomes,
    bucketing: &Bucketing,
    granularity: Granularity,
) -> Rho {
    // stats works on string ids; the key order is preserved by the index prefix.
    let ids: BTreeMap<&ProgramKey, String> = values
        .keys()
        .enumerate()
        .map(|(i, k)| (k, format!("{i:08}")))
        .collect();
    let v: BTreeMap<String, f64> = values.iter().map(|(k, x)| (ids[k].clone(), *x)).collect();
    let o: BTreeMap<String, Outcome> = model
        .outcomes
        .iter()
        .filter_map(|(k, out)| ids.get(k).map(|id| (id.clone(), out.clone())))
        .collect();
    let result = match granularity {
        Granularity::Program => correlate_property(&v, &o),
        Granularity::Bucket => correlate_buckets(&v, &o, bucketing),
    };
    match result {
        Ok(r) => Rho::Value(r),
        Err(_) => Rho::Degenerate,
    }
}

/// Type match and value match rates per expected output category.
pub fn type_report(models: &[ModelOutcomes]) -> AnalysisReport {
    let kind = ReportKind::Types;
    let categories: BTreeSet<ValueCategory> = models
        .iter()
        .flat_map(|m| m.outcomes.values().map(|o| o.expected_category))
        .collect();
    let mut rows = Vec::new();
    let mut clusters = Vec::new();
    for c in &categories {
        clusters.push(format!("{c}/TM"));
        clusters.push(format!("{c}/VM"));
    }
    let mut chart = Chart::new(kind.title(), "rate", 1.0);
    chart.categories = categories.iter().map(|c| c.to_string()).collect();
    for (i, model) in models.iter().enumerate() {
        let mut tm_bars = BarSeries::new(&format!("{} TM", model.model_id), color(i));
        let mut vm_bars = BarSeries::new(&format!("{} VM", model.model_id), color(i));
        vm_bars.opacity = 0.45;
        for &cat in &categories {
            let in_cat: Vec<&Outcome> = model
                .outcomes
                .values()
                .filter(|o| o.expected_category == cat)
                .collect();
            let tm = in_cat.iter().filter(|o| o.type_match).count();
            let vm = in_cat.iter().filter(|o| o.value_match).count();
            let tm_row = Row::new(
                kind,
                &model.model_id,
                &format!("{cat}/TM"),
                in_cat.len(),
                tm,
                Rho::None,
            );
            let vm_row = Row::new(
                kind,
                &model.model_id,
                &format!("{cat}/VM"),
                in_cat.len(),
                vm,
                Rho::None,
            );
            tm_bars
                .stacks
                .push(vec![(tm_row.accuracy.unwrap_or(0.0), 1.0)]);
            vm_bars
                .stacks
                .push(vec![(vm_row.accuracy.unwrap_or(0.0), 1.0)]);
            rows.push(tm_row);
            rows.push(vm_row);
        }
        chart.bars.push(tm_bars);
        chart.bars.push(vm_bars);
    }
    AnalysisReport {
        kind,
        scope: POOLED.to_string(),
        models: model_ids(models),
        clusters,
        granularity: None,
        bucketing: None,
        rows,
        chart: chart.render(),
    }
}

/// One pooled report per kind, plus per-benchmark variants when the facts span
/// more than one benchmark.
pub fn build_reports(
    facts: &[ProgramFacts],
    models: &[ModelOutcomes],
    kinds: &[ReportKind],
    granularity: Granularity,
) -> Vec<AnalysisReport> {
    let benchmarks: BTreeSet<&str> = facts.iter().map(|f| f.key.benchmark.as_str()).collect();
    let mut out = Vec::new();
    for &kind in kinds {
        out.push(build_one(kind, facts, models, granularity));
        if benchmarks.len() < 2 {
            continue;
        }
        for &b in &benchmarks {
            let facts: Vec<ProgramFacts> = facts
                .iter()
                .filter(|f| f.key.benchmark == b)
                .cloned()
                .collect();
            let models: Vec<ModelOutcomes> = models
                .iter()
                .map(|m| ModelOutcomes {
                    model_id: m.model_id.clone(),
                    outcomes: m
                        .outcomes
                        .iter()
                        .filter(|(k, _)| k.benchmark == b)
                        .map(|(k, o)| (k.clone(), o.clone()))
                        .collect(),
                })
                .collect();
            let mut report = build_one(kind, &facts, &models, granularity);
            report.scope = b.to_string();
            out.push(report);
        }
    }
    out
}

fn build_one(
    kind: ReportKind,
    facts: &[ProgramFacts],
    models: &[ModelOutcomes],
    granularity: Granularity,
) -> AnalysisReport {
    let complexity = |metric: ComplexityMetric| {
        complexity_report(
            facts,
            models,
            metric,
            &metric.default_bucketing(),
            granularity,
        )
    };
    match kind {
        ReportKind::Constructs => construct_report(facts, models),
        ReportKind::Cyclomatic => complexity(ComplexityMetric::Cyclomatic),
        ReportKind::Cognitive => complexity(ComplexityMetric::Cognitive),
        ReportKind::Loc => complexity(ComplexityMetric::Loc),
        ReportKind::LoopLength => {
            loop_report(facts, models, &Bucketing::loop_length(), granularity)
        }
        ReportKind::Types => type_report(models),
    }
}

impl AnalysisReport {
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record([
            "kind",
            "model",
            "cluster",
            "n",
            "n_correct",
            "accuracy",
            "rho",
        ])
        .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.kind.name().to_string(),
                r.model.clone(),
                r.cluster.clone(),
                r.n.to_string(),
                r.n_correct.to_string(),
                r.accuracy.map(|a| a.to_string()).unwrap_or_default(),
                r.rho.cell(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            tool: &'static str,
            version: &'static str,
            #[serde(flatten)]
            report: &'a AnalysisReport,
        }
        let doc = Doc {
            tool: "execlens",
            version: env!("CARGO_PKG_VERSION"),
            report: self,
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
        text.push('\n');
        text
    }

    /// File stem: the kind, suffixed with the benchmark for per-benchmark variants.
    pub fn file_stem(&self) -> String {
        if self.scope == POOLED {
            self.kind.name().to_string()
        } else {
            format!("{}_{}", self.kind.name(), self.scope)
        }
    }

    /// Plain-text table for terminals.
    pub fn summary(&self) -> String {
        let mut out = format!("{} ({})\n", self.kind, self.scope);
        let _ = writeln!(
            out,
            "{:<20} {:<12} {:>5} {:>9} {:>9} {:>8}",
            "model", "cluster", "n", "correct", "accuracy", "rho"
        );
        for r in &self.rows {
            let acc = r
                .accuracy
                .map(|a| format!("{a:.3}"))
                .unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{:<20} {:<12} {:>5} {:>9} {:>9} {:>8}",
                r.model,
                r.cluster,
                r.n,
                r.n_correct,
                acc,
                rho_text(r.rho)
            );
        }
        out
    }
}

#[derive(Debug, Error)]
#[error("cannot write {}: {source}", .path.display())]
pub struct WriteError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

pub fn figures_dir(root: &Path) -> PathBuf {
    root.join("Experiment_Results").join("figures")
}

/// Writes `<kind>.csv`, `<kind>.json` and `<kind>.svg` under the report's figures folder.
pub fn write_report(figures: &Path, report: &AnalysisReport) -> Result<Vec<PathBuf>, WriteError> {
    let dir = figures.join(report.kind.directory());
    fs::create_dir_all(&dir).map_err(|source| WriteError {
        path: dir.clone(),
        source,
    })?;
    let stem = report.file_stem();
    let mut written = Vec::new();
    for (ext, text) in [
        ("csv", report.to_csv()),
        ("json", report.to_json()),
        ("svg", report.chart.clone()),
    ] {
        let path = dir.join(format!("{stem}.{ext}"));
        let tmp = dir.join(format!(".{stem}.{ext}.tmp"));
        fs::write(&tmp, text)
            .and_then(|_| fs::rename(&tmp, &path))
            .map_err(|source| WriteError {
                path: path.clone(),
                source,
            })?;
        written.push(path);
    }
    Ok(written)
}

fn nice_ceiling(v: f64) -> f64 {
    if v <= 1.0 {
        return 1.0;
    }
    let magnitude = 10f64.powf(v.log10().floor());
    for step in [1.0, 2.0, 5.0, 10.0] {
        if v <= step * magnitude {
            return step * magnitude;
        }
    }
    10.0 * magnitude
}

struct BarSeries {
    name: String,
    color: &'static str,
    opacity: f64,
    /// Per category, stacked segments of (height, opacity factor).
    stacks: Vec<Vec<(f64, f64)>>,
}

impl BarSeries {
    fn new(name: &str, color: &'static str) -> Self {
        BarSeries {
            name: name.to_string(),
            color,
            opacity: 1.0,
            stacks: Vec::new(),
        }
    }
}

struct DotSeries {
    name: String,
    color: &'static str,
    /// Right-axis values in [0, 1].
    points: Vec<Option<f64>>,
}

struct Chart {
    title: String,
    y_label: String,
    y_max: f64,
    right_axis: Option<String>,
    categories: Vec<String>,
    bars: Vec<BarSeries>,
    dots: Vec<DotSeries>,
    notes: Vec<String>,
}

fn xml(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

impl Chart {
    fn new(title: &str, y_label: &str, y_max: f64) -> Self {
        Chart {
            title: title.to_string(),
            y_label: y_label.to_string(),
            y_max,
            right_axis: None,
            categories: Vec::new(),
            bars: Vec::new(),
            dots: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn render(&self) -> String {
        let (w, h) = (CANVAS_WIDTH as f64, CANVAS_HEIGHT as f64);
        let (left, right, top, bottom) = (60.0, 60.0, 40.0, 90.0);
        let (pw, ph) = (w - left - right, h - top - bottom);
        let base = top + ph;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            w / 2.0,
            xml(&self.title)
        );

        for i in 0..=4 {
            let frac = i as f64 / 4.0;
            let y = base - frac * ph;
            let _ = writeln!(
                s,
                r##"<line x1="{left}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#dddddd"/>"##,
                left + pw
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                left - 6.0,
                y + 4.0,
                axis_number(frac * self.y_max)
            );
            if self.right_axis.is_some() {
                let _ = writeln!(
                    s,
                    r#"<text x="{:.1}" y="{:.1}">{frac:.2}</text>"#,
                    left + pw + 6.0,
                    y + 4.0
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<text transform="translate(16 {:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
            top + ph / 2.0,
            xml(&self.y_label)
        );
        if let Some(label) = &self.right_axis {
            let _ = writeln!(
                s,
                r#"<text transform="translate({:.1} {:.1}) rotate(90)" text-anchor="middle">{}</text>"#,
                w - 12.0,
                top + ph / 2.0,
                xml(label)
            );
        }
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{base:.1}" x2="{:.1}" y2="{base:.1}" stroke="#333333"/>"##,
            left + pw
        );

        let ncat = self.categories.len().max(1) as f64;
        let group = pw / ncat;
        let nseries = self.bars.len().max(1) as f64;
        let bar_w = group * 0.8 / nseries;
        for (c, label) in self.categories.iter().enumerate() {
            let gx = left + c as f64 * group;
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                gx + group / 2.0,
                base + 16.0,
                xml(label)
            );
            for (k, series) in self.bars.iter().enumerate() {
                let x = gx + group * 0.1 + k as f64 * bar_w;
                let mut y = base;
                for &(value, shade) in series.stacks.get(c).map(Vec::as_slice).unwrap_or(&[]) {
                    let bh = value / self.y_max * ph;
                    if bh <= 0.0 {
                        continue;
                    }
                    y -= bh;
                    let _ = writeln!(
                        s,
                        r#"<rect x="{x:.1}" y="{y:.1}" width="{bar_w:.1}" height="{bh:.1}" fill="{}" fill-opacity="{:.2}"/>"#,
                        series.color,
                        series.opacity * shade
                    );
                }
            }
            for (k, series) in self.dots.iter().enumerate() {
                if let Some(Some(v)) = series.points.get(c) {
                    let cx = gx + group * 0.1 + (k as f64 + 0.5) * bar_w;
                    let _ = writeln!(
                        s,
                        r##"<circle cx="{cx:.1}" cy="{:.1}" r="4" fill="{}" stroke="#222222"><title>{}: {v:.3}</title></circle>"##,
                        base - v * ph,
                        series.color,
                        xml(&series.name)
                    );
                }
            }
        }

        let mut lx = left;
        let ly = base + 36.0;
        for series in &self.bars {
            let _ = writeln!(
                s,
                r#"<rect x="{lx:.1}" y="{:.1}" width="10" height="10" fill="{}" fill-opacity="{:.2}"/>"#,
                ly - 9.0,
                series.color,
                series.opacity
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{ly:.1}">{}</text>"#,
                lx + 14.0,
                xml(&series.name)
            );
            lx += 24.0 + 7.0 * series.name.chars().count() as f64;
        }
        for (i, note) in self.notes.iter().enumerate() {
            let _ = writeln!(
                s,
                r#"<text x="{left}" y="{:.1}">{}</text>"#,
                ly + 16.0 + 13.0 * i as f64,
                xml(note)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn axis_number(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}
