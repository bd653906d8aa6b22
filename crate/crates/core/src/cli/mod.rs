//! Command-line front end: dataset loading, ranker construction and the
//! `explain`, `compare`, `eval` and `prune` commands.

pub mod formats;
pub mod svg;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use formats::{group_letor, parse_instances, parse_letor, serialize_letor, LetorRecord};
pub use svg::render_svg_bars;

use crate::baselines::SubsetSearch;
use crate::error::Error;
use crate::eval::{
    explain_with, run_benchmark, score_explanation, BenchmarkConfig, Dataset, EvalReport, InstanceResult, System,
};
use crate::explain::{ExplainerConfig, Explanation, DEFAULT_EPOCHS, DEFAULT_K};
use crate::features::SpaceKind;
use crate::losses::LossKind;
use crate::perturb::PerturbationPlan;
use crate::prune::{prune_instance, PruneMode, PruneOutcome};
use crate::rankers::{Bm25Ranker, CorpusStats, ExternalRanker, InputKind, RankerHandle};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "rank-explain", version, about = "Explain the rankings of learning-to-rank models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit one explanation and write it as JSON (and optionally SVG).
    Explain(ExplainArgs),
    /// Explain one instance with several systems and score each.
    Compare(CompareArgs),
    /// Score systems over many instances and print the summary table.
    Eval(EvalArgs),
    /// Prune the feature set and report fidelity before and after.
    Prune(PruneArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SpaceArg {
    Words,
    Engineered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PerturbArg {
    Single,
    Group,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PruneModeArg {
    Independent,
    Exhaustive,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// JSONL text instances or a LETOR feature file.
    #[arg(long)]
    instances: PathBuf,
    /// Explanation space; defaults to words for text and engineered for LETOR.
    #[arg(long, value_enum)]
    space: Option<SpaceArg>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long, default_value = "approx-ndcg", value_parser = parse_loss)]
    loss: LossKind,
    #[arg(long, value_enum, default_value = "group")]
    perturb: PerturbArg,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    /// Perturbation samples per instance; defaults to 5 per feature.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_EPOCHS)]
    epochs: usize,
    #[arg(long, env = "RANK_EXPLAIN_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ExplainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// bm25 | linear:MODEL | stumps:MODEL | external:CMD
    #[arg(long)]
    ranker: String,
    #[command(flatten)]
    fit: FitArgs,
    /// Instance to explain; defaults to the first.
    #[arg(long)]
    qid: Option<String>,
    /// Defaults to stdout.
    #[arg(long)]
    out_json: Option<PathBuf>,
    #[arg(long)]
    out_svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    ranker: String,
    #[command(flatten)]
    fit: FitArgs,
    #[arg(long, value_delimiter = ',', default_value = "rank-lime,averaged-exs,weighted-exs,topk,random", value_parser = parse_system)]
    systems: Vec<System>,
    #[arg(long)]
    qid: Option<String>,
    #[arg(long)]
    out_json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Repeat to evaluate several rankers.
    #[arg(long, required = true)]
    ranker: Vec<String>,
    #[command(flatten)]
    fit: FitArgs,
    #[arg(long, value_delimiter = ',', default_value = "rank-lime,averaged-exs,weighted-exs,topk,random", value_parser = parse_system)]
    systems: Vec<System>,
    /// Instances evaluated, from the start of the file.
    #[arg(long, default_value_t = 50)]
    limit: usize,
    #[arg(long)]
    out_json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PruneArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    ranker: String,
    #[command(flatten)]
    fit: FitArgs,
    #[arg(long, value_enum)]
    mode: PruneModeArg,
    #[arg(long, default_value_t = 50)]
    limit: usize,
    #[arg(long)]
    out_json: Option<PathBuf>,
}

fn parse_loss(s: &str) -> Result<LossKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_system(s: &str) -> Result<System, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A failure with its exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Which ranker to build, from `--ranker`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RankerSpec {
    Bm25,
    Linear(PathBuf),
    Stumps(PathBuf),
    External(String),
}

impl std::str::FromStr for RankerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::InvalidInput(format!("ranker {s:?} is not bm25, linear:MODEL, stumps:MODEL or external:CMD"));
        if s == "bm25" {
            return Ok(RankerSpec::Bm25);
        }
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        if arg.is_empty() {
            return Err(bad());
        }
        match kind {
            "linear" => Ok(RankerSpec::Linear(arg.into())),
            "stumps" => Ok(RankerSpec::Stumps(arg.into())),
            "external" => Ok(RankerSpec::External(arg.to_owned())),
            _ => Err(bad()),
        }
    }
}

fn read_input(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

/// Loads JSONL text instances, or LETOR lines when the first non-blank line
/// does not start with `{`.
pub fn load_dataset(path: &Path) -> Result<Dataset, Error> {
    let text = std::fs::read_to_string(path)?;
    parse_dataset(&text)
}

pub fn parse_dataset(text: &str) -> Result<Dataset, Error> {
    let first = text.lines().map(str::trim).find(|l| !l.is_empty());
    if first.is_some_and(|l| l.starts_with('{')) {
        let (vocab, instances) = parse_instances(text)?;
        let stats = CorpusStats::from_instances(&instances);
        Ok(Dataset::Text { vocab, stats, instances })
    } else {
        let records = parse_letor(text, None)?;
        let width = records.first().map_or(0, |r| r.features.len());
        let feature_names = (1..=width).map(|i| format!("f{i}")).collect();
        Ok(Dataset::Tabular { feature_names, instances: group_letor(&records)? })
    }
}

fn load(data: &DataArgs) -> CliResult<(Dataset, SpaceKind)> {
    let text = read_input(&data.instances)?;
    let dataset = parse_dataset(&text)?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset.into());
    }
    let space = match (data.space, &dataset) {
        (Some(SpaceArg::Words), Dataset::Tabular { .. }) => {
            return Err(Failure::Usage("--space words needs JSONL text instances".into()))
        }
        (Some(SpaceArg::Words), _) | (None, Dataset::Text { .. }) => SpaceKind::Words,
        _ => SpaceKind::Engineered,
    };
    Ok((dataset, space))
}

fn read_model<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_input(path)?;
    serde_json::from_str(&text).map_err(|e| Failure::Runtime(anyhow::anyhow!("model {}: {e}", path.display())))
}

fn build_ranker(spec: &str, dataset: &Dataset) -> CliResult<RankerHandle> {
    let spec: RankerSpec = spec.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?;
    Ok(match spec {
        RankerSpec::Bm25 => match dataset {
            Dataset::Text { stats, .. } => RankerHandle::Bm25(Bm25Ranker::new(stats.clone())),
            Dataset::Tabular { .. } => return Err(Failure::Usage("bm25 needs JSONL text instances".into())),
        },
        RankerSpec::Linear(p) => RankerHandle::Linear(read_model(&p)?),
        RankerSpec::Stumps(p) => RankerHandle::Stumps(read_model(&p)?),
        RankerSpec::External(cmd) => {
            let kind = match dataset {
                Dataset::Text { .. } => InputKind::Text,
                Dataset::Tabular { .. } => InputKind::Tabular,
            };
            RankerHandle::External(ExternalRanker::spawn(&cmd, kind)?)
        }
    })
}

fn explainer_config(fit: &FitArgs) -> ExplainerConfig {
    let mut plan = match fit.perturb {
        PerturbArg::Single => PerturbationPlan::single(),
        PerturbArg::Group => PerturbationPlan::group(),
    };
    plan.count = fit.samples;
    ExplainerConfig { loss: fit.loss, k: fit.k, epochs: fit.epochs, seed: fit.seed, plan, ..ExplainerConfig::default() }
}

fn benchmark_config(fit: &FitArgs, space: SpaceKind, limit: usize) -> BenchmarkConfig {
    BenchmarkConfig {
        explainer: explainer_config(fit),
        space,
        topk_search: SubsetSearch::Greedy,
        instance_limit: limit,
        ..BenchmarkConfig::default()
    }
}

fn instance_index(dataset: &Dataset, qid: Option<&str>) -> CliResult<usize> {
    match qid {
        None => Ok(0),
        Some(q) => (0..dataset.len())
            .find(|&i| dataset.subject(i).id() == q)
            .ok_or_else(|| Failure::Usage(format!("no instance with qid {q:?}"))),
    }
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn explain(args: &ExplainArgs, out: &mut dyn Write) -> CliResult<()> {
    let (dataset, kind) = load(&args.data)?;
    let ranker = build_ranker(&args.ranker, &dataset)?;
    let index = instance_index(&dataset, args.qid.as_deref())?;
    let space = dataset.space(index, kind)?;
    let config = explainer_config(&args.fit);
    let e = crate::explain::fit(dataset.subject(index), &ranker, &space, &config)?;
    emit(args.out_json.as_deref(), &to_json(&e)?, out)?;
    if let Some(p) = &args.out_svg {
        std::fs::write(p, render_svg_bars(&e))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Comparison<'a> {
    report: &'a EvalReport,
    explanations: &'a [Explanation],
}

fn compare(args: &CompareArgs, out: &mut dyn Write) -> CliResult<()> {
    let (dataset, kind) = load(&args.data)?;
    let ranker = build_ranker(&args.ranker, &dataset)?;
    let index = instance_index(&dataset, args.qid.as_deref())?;
    let space = dataset.space(index, kind)?;
    let subject = dataset.subject(index);
    let config = benchmark_config(&args.fit, kind, 1);
    let name = args.ranker.clone();
    let mut explanations = Vec::new();
    let mut results = Vec::new();
    for &system in &args.systems {
        let e = explain_with(system, subject, &ranker, &space, &config, args.fit.seed)?;
        let (fidelity, explain_ndcg, interpretability) = score_explanation(subject, &ranker, &space, &e)?;
        results.push(InstanceResult {
            ranker: name.clone(),
            system,
            instance_id: subject.id().to_string(),
            fidelity,
            explain_ndcg,
            interpretability,
        });
        explanations.push(e);
    }
    let report = EvalReport::from_results(results, Vec::new());
    if let Some(p) = &args.out_json {
        std::fs::write(p, to_json(&Comparison { report: &report, explanations: &explanations })?)?;
    }
    out.write_all(report.table().as_bytes())?;
    Ok(())
}

fn eval(args: &EvalArgs, out: &mut dyn Write) -> CliResult<()> {
    let (dataset, kind) = load(&args.data)?;
    let rankers = args.ranker.iter().map(|r| build_ranker(r, &dataset)).collect::<CliResult<Vec<_>>>()?;
    let named: Vec<(String, &dyn crate::rankers::Ranker)> =
        args.ranker.iter().cloned().zip(rankers.iter().map(|r| r as &dyn crate::rankers::Ranker)).collect();
    let config = benchmark_config(&args.fit, kind, args.limit);
    let report = run_benchmark(&dataset, &named, &args.systems, &config, args.fit.seed)?;
    if let Some(p) = &args.out_json {
        std::fs::write(p, to_json(&report)?)?;
    }
    out.write_all(report.table().as_bytes())?;
    Ok(())
}

fn prune(args: &PruneArgs, out: &mut dyn Write) -> CliResult<()> {
    let (dataset, kind) = load(&args.data)?;
    let ranker = build_ranker(&args.ranker, &dataset)?;
    let mode = match args.mode {
        PruneModeArg::Independent => PruneMode::Independent,
        PruneModeArg::Exhaustive => PruneMode::Exhaustive,
    };
    let mut outcomes: Vec<PruneOutcome> = Vec::new();
    for index in 0..dataset.len().min(args.limit) {
        let space = dataset.space(index, kind)?;
        let config = ExplainerConfig { seed: args.fit.seed.wrapping_add(index as u64), ..explainer_config(&args.fit) };
        outcomes.push(prune_instance(dataset.subject(index), &ranker, &space, mode, args.fit.k, &config)?);
    }
    if let Some(p) = &args.out_json {
        std::fs::write(p, to_json(&outcomes)?)?;
    }
    let mut table = String::from("Instance | Kept | Before | After\n");
    for o in &outcomes {
        table.push_str(&format!(
            "{} | {} | {:.4} | {:.4}\n",
            o.instance_id,
            o.features.join(","),
            o.fidelity_before,
            o.fidelity_after
        ));
    }
    if !outcomes.is_empty() {
        let n = outcomes.len() as f64;
        table.push_str(&format!(
            "mean | | {:.4} | {:.4}\n",
            outcomes.iter().map(|o| o.fidelity_before).sum::<f64>() / n,
            outcomes.iter().map(|o| o.fidelity_after).sum::<f64>() / n
        ));
    }
    out.write_all(table.as_bytes())?;
    Ok(())
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit code: 0 on success, 1 for usage errors, 2 for runtime failures.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { out.write_all(rendered.as_bytes()) } else { err.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Explain(a) => explain(a, out),
        Command::Compare(a) => compare(a, out),
        Command::Eval(a) => eval(a, out),
        Command::Prune(a) => prune(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_RUNTIME
        }
    }
}
