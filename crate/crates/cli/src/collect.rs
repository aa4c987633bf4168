use execlens_core::analysis::correctness;
use execlens_core::corpus::{
    load_benchmark, merge_results, parse_results, results_path, write_results, Problem,
};
use execlens_gateway::{
    collect_predictions, CollectError, CollectOptions, GatewayError, Provider, ProviderConfig,
    ProviderKind,
};

use crate::config::{pick, pick_list};
use crate::{
    pick_enum, CollectArgs, Fail, Globals, ProviderArg, EXIT_ANALYSIS, EXIT_MISSING_DATA,
    EXIT_USAGE,
};

fn gateway_fail(e: GatewayError) -> Fail {
    let code = match e {
        GatewayError::MissingApiKey(_) => EXIT_USAGE,
        GatewayError::MockFixture { .. } => EXIT_MISSING_DATA,
        _ => EXIT_ANALYSIS,
    };
    Fail::new(code, e.to_string())
}

fn load(globals: &Globals, dataset: &str) -> Result<Vec<Problem>, Fail> {
    load_benchmark(&globals.root.join("dataset"), dataset)
        .map_err(|e| Fail::new(EXIT_MISSING_DATA, format!("dataset {dataset}: {e}")))
}

fn merge(
    args: &CollectArgs,
    model: &str,
    datasets: &[String],
    globals: &Globals,
) -> Result<(), Fail> {
    let [dataset] = datasets else {
        return Err(Fail::usage("--merge takes exactly one dataset"));
    };
    let problems = load(globals, dataset)?;
    let mut sets = Vec::new();
    let mut scores = Vec::new();
    for path in &args.merge {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Fail::new(
                EXIT_MISSING_DATA,
                format!("result file {}: {e}", path.display()),
            )
        })?;
        let set = parse_results(&text, model, dataset)
            .map_err(|e| Fail::new(EXIT_ANALYSIS, format!("{}: {e}", path.display())))?;
        scores.push(correctness(&problems, &set));
        sets.push(set);
    }
    let merged =
        merge_results(&sets, &scores).map_err(|e| Fail::new(EXIT_ANALYSIS, e.to_string()))?;
    let out = results_path(&globals.root, model, dataset);
    write_results(&out, &merged).map_err(|e| Fail::new(EXIT_ANALYSIS, e.to_string()))?;
    let best = scores
        .iter()
        .map(|s| s.values().filter(|c| **c).count())
        .max()
        .unwrap_or(0);
    let now = correctness(&problems, &merged)
        .values()
        .filter(|c| **c)
        .count();
    println!(
        "merged {} files into {}: {} records, {now} correct (best single file {best})",
        args.merge.len(),
        out.display(),
        merged.records.len()
    );
    Ok(())
}

pub fn run(args: CollectArgs, globals: &Globals) -> Result<(), Fail> {
    let config = &globals.config;
    let model = match args
        .model
        .clone()
        .or_else(|| config.str("model").map(String::from))
    {
        Some(m) => m,
        None => return Err(Fail::usage("no model given (use --model)")),
    };
    let datasets = pick_list(args.datasets.clone(), config, "datasets");
    if datasets.is_empty() {
        return Err(Fail::usage("no datasets given (use --datasets)"));
    }
    if !args.merge.is_empty() {
        return merge(&args, &model, &datasets, globals);
    }

    let kind = pick_enum(args.provider, config, "provider", ProviderArg::HttpChat)?;
    let default_endpoint = match kind {
        ProviderArg::Mock => globals
            .root
            .join("mock")
            .join(format!("{model}.json"))
            .display()
            .to_string(),
        ProviderArg::HttpChat => execlens_gateway::provider::DEFAULT_ENDPOINT.to_string(),
    };
    let provider_config = ProviderConfig {
        model_id: model.clone(),
        endpoint: pick(args.endpoint, config, "endpoint", default_endpoint).map_err(Fail::usage)?,
        api_key_env: pick(
            args.api_key_env,
            config,
            "api_key_env",
            execlens_gateway::provider::DEFAULT_API_KEY_ENV.to_string(),
        )
        .map_err(Fail::usage)?,
        temperature: pick(args.temperature, config, "temperature", 0.0).map_err(Fail::usage)?,
        max_tokens: pick(args.max_tokens, config, "max_tokens", 1024).map_err(Fail::usage)?,
        provider_kind: match kind {
            ProviderArg::Mock => ProviderKind::Mock,
            ProviderArg::HttpChat => ProviderKind::HttpChat,
        },
    };
    let options = CollectOptions {
        concurrency: pick(args.concurrency, config, "concurrency", 4).map_err(Fail::usage)?,
        ..Default::default()
    };
    let provider = Provider::new(provider_config).map_err(gateway_fail)?;
    provider.check_ready().map_err(gateway_fail)?;

    for dataset in &datasets {
        let problems = load(globals, dataset)?;
        let out = results_path(&globals.root, &model, dataset);
        let summary =
            collect_predictions(&provider, &problems, &out, &options).map_err(|e| match e {
                CollectError::Provider(g) => gateway_fail(g),
                other => Fail::new(EXIT_ANALYSIS, other.to_string()),
            })?;
        println!(
            "{dataset}: {} queried, {} reused, {} failed -> {}",
            summary.queried,
            summary.reused,
            summary.failures.len(),
            out.display()
        );
        for (id, why) in &summary.failures {
            println!("  failed {id}: {why}");
        }
    }
    Ok(())
}
