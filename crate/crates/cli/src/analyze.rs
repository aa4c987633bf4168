use std::collections::BTreeMap;
use std::path::PathBuf;

use execlens_core::analysis::{analyze_program, score_result_set, AnalyzedProgram};
use execlens_core::corpus::{load_benchmark, load_results, results_path};
use execlens_core::dynamics::{read_trace, trace_path, LoopAggregate};
use execlens_core::report::{build_reports, figures_dir, write_report, ModelOutcomes, ReportKind};
use execlens_core::stats::Granularity;
use rayon::prelude::*;

use crate::config::{pick, pick_list};
use crate::trace::{print_summary, trace_problems, DEFAULT_TRACER};
use crate::{
    pick_enum, thread_pool, AggregateArg, AnalysisKind, AnalyzeArgs, Fail, Globals, GranularityArg,
    EXIT_ANALYSIS, EXIT_MISSING_DATA,
};

pub fn report_kinds(kind: AnalysisKind) -> Vec<ReportKind> {
    match kind {
        AnalysisKind::Constructs => vec![ReportKind::Constructs],
        AnalysisKind::Cc => vec![ReportKind::Cyclomatic],
        AnalysisKind::Cognitive => vec![ReportKind::Cognitive],
        AnalysisKind::Loc => vec![ReportKind::Loc],
        AnalysisKind::LoopLength => vec![ReportKind::LoopLength],
        AnalysisKind::Types => vec![ReportKind::Types],
        AnalysisKind::All => ReportKind::ALL.to_vec(),
    }
}

pub fn run(args: AnalyzeArgs, globals: &Globals) -> Result<(), Fail> {
    let config = &globals.config;
    let root = &globals.root;
    let models = pick_list(args.models, config, "models");
    let datasets = pick_list(args.datasets, config, "datasets");
    if models.is_empty() {
        return Err(Fail::usage("no models given (use --models)"));
    }
    if datasets.is_empty() {
        return Err(Fail::usage("no datasets given (use --datasets)"));
    }
    let granularity = match pick_enum(
        args.granularity,
        config,
        "granularity",
        GranularityArg::Program,
    )? {
        GranularityArg::Program => Granularity::Program,
        GranularityArg::Bucket => Granularity::Bucket,
    };
    let aggregate = match pick_enum(
        args.loop_aggregate,
        config,
        "loop_aggregate",
        AggregateArg::Max,
    )? {
        AggregateArg::Max => LoopAggregate::Max,
        AggregateArg::Sum => LoopAggregate::Sum,
    };
    let out = pick(args.out, config, "out", root.clone()).map_err(Fail::usage)?;
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
    let kinds = report_kinds(args.kind);
    let needs_traces = kinds.contains(&ReportKind::LoopLength);

    let mut facts = Vec::new();
    let mut outcomes: Vec<ModelOutcomes> = models
        .iter()
        .map(|m| ModelOutcomes {
            model_id: m.clone(),
            outcomes: BTreeMap::new(),
        })
        .collect();
    for dataset in &datasets {
        let problems = load_benchmark(&root.join("dataset"), dataset)
            .map_err(|e| Fail::new(EXIT_MISSING_DATA, format!("dataset {dataset}: {e}")))?;
        let mut sets = Vec::new();
        for model in &models {
            let path = results_path(root, model, dataset);
            if !path.exists() {
                return Err(Fail::new(
                    EXIT_MISSING_DATA,
                    format!("missing result file {}", path.display()),
                ));
            }
            let set = load_results(&path).map_err(|e| Fail::new(EXIT_ANALYSIS, e.to_string()))?;
            let unknown = set.unknown_problems(&problems);
            if !unknown.is_empty() {
                log::warn!(
                    "{}: {} records for unknown problems ignored",
                    path.display(),
                    unknown.len()
                );
            }
            sets.push(set);
        }

        if needs_traces {
            let missing: Vec<PathBuf> = problems
                .iter()
                .map(|p| trace_path(root, dataset, &p.problem_id))
                .filter(|t| !t.exists())
                .collect();
            if !missing.is_empty() {
                if !args.trace {
                    return Err(Fail::new(
                        EXIT_MISSING_DATA,
                        format!(
                            "missing trace file {} ({} of {} missing); run `execlens trace` or pass --trace",
                            missing[0].display(),
                            missing.len(),
                            problems.len()
                        ),
                    ));
                }
                let summary = trace_problems(&tracer, root, &problems, timeout, false, &pool)?;
                print!("{dataset}: ");
                print_summary(&summary);
                if let Some((id, why)) = summary.failed.first() {
                    return Err(Fail::new(
                        EXIT_ANALYSIS,
                        format!("tracing {id} failed: {why}"),
                    ));
                }
            }
        }

        let analyzed: Vec<AnalyzedProgram> = pool
            .install(|| {
                problems
                    .par_iter()
                    .map(|p| {
                        let trace = if needs_traces {
                            let path = trace_path(root, dataset, &p.problem_id);
                            Some(
                                read_trace(&path)
                                    .map_err(|e| format!("{}: {e}", path.display()))?,
                            )
                        } else {
                            None
                        };
                        analyze_program(p, trace.as_ref(), aggregate).map_err(|e| e.to_string())
                    })
                    .collect::<Result<_, String>>()
            })
            .map_err(|e| Fail::new(EXIT_ANALYSIS, e))?;
        facts.extend(analyzed.into_iter().map(|a| a.facts));
        for (model, set) in outcomes.iter_mut().zip(&sets) {
            model.outcomes.extend(score_result_set(&problems, set));
        }
    }

    let reports = build_reports(&facts, &outcomes, &kinds, granularity);
    let figures = figures_dir(&out);
    let mut written = 0;
    for report in &reports {
        written += write_report(&figures, report)
            .map_err(|e| Fail::new(EXIT_ANALYSIS, e.to_string()))?
            .len();
        println!("{}", report.summary());
    }
    println!("wrote {written} files under {}", figures.display());
    Ok(())
}
