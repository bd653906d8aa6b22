//! Explanation quality metrics and the benchmark runner.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::baselines::{aggregate_exs, exs_per_document, random_for, topk_features, Aggregation, RelevanceTransform, SubsetSearch};
use crate::error::{Error, Result};
use crate::explain::{fit, ExplainerConfig, Explanation};
use crate::features::{FeatureMatrix, FeatureSpace, SpaceKind, TabularInstance};
use crate::instance::{min_max_normalize, rank_from_scores, Instance, Ranking, Vocabulary};
use crate::perturb::Subject;
use crate::rankers::{CorpusStats, Ranker};

pub const EXPLAIN_NDCG_CUTOFF: usize = 10;

/// Kendall's tau-a between two permutations of the same documents.
pub fn kendall_tau(a: &Ranking, b: &Ranking) -> Result<f64> {
    let n = a.len();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: b.len() });
    }
    let is_perm = |r: &Ranking| {
        let mut seen = vec![false; n];
        r.ordering.iter().all(|&d| d < n && !std::mem::replace(&mut seen[d], true))
    };
    if !is_perm(a) || !is_perm(b) {
        return Err(Error::InvalidInput("rankings are not permutations of the same documents".into()));
    }
    if n < 2 {
        return Ok(1.0);
    }
    let pa = a.positions();
    let pb = b.positions();
    let mut score: i64 = 0;
    for i in 0..n {
        for j in i + 1..n {
            let da = pa[i] < pa[j];
            let db = pb[i] < pb[j];
            score += if da == db { 1 } else { -1 };
        }
    }
    Ok(score as f64 / (n * (n - 1) / 2) as f64)
}

/// NDCG of `ordering` truncated at `k`, with linear gains. All-zero gains
/// score 1.
pub fn ndcg_at_k(ordering: &[usize], gains: &[f64], k: usize) -> f64 {
    let dcg: f64 = ordering.iter().take(k).enumerate().map(|(i, &d)| gains[d] / (i as f64 + 2.0).log2()).sum();
    let mut ideal = gains.to_vec();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let idcg: f64 = ideal.iter().take(k).enumerate().map(|(i, g)| g / (i as f64 + 2.0).log2()).sum();
    if idcg <= 0.0 {
        return 1.0;
    }
    (dcg / idcg).clamp(0.0, 1.0)
}

/// `w . row` for every row; columns beyond `weights` are ignored.
pub fn explanation_scores(weights: &[f64], features: &FeatureMatrix) -> Vec<f64> {
    features.iter().map(|row| row.iter().zip(weights).map(|(x, w)| x * w).sum()).collect()
}

fn g_ranking(explanation: &Explanation, features: &FeatureMatrix) -> Result<Ranking> {
    let m = features.first().map_or(0, Vec::len);
    rank_from_scores(&explanation_scores(&explanation.dense_weights(m), features))
}

/// Kendall's tau between the black-box ranking and the explanation's.
pub fn fidelity(f_scores: &[f64], explanation: &Explanation, features: &FeatureMatrix) -> Result<f64> {
    kendall_tau(&rank_from_scores(f_scores)?, &g_ranking(explanation, features)?)
}

/// NDCG@10 of the explanation's ordering, using min-max normalized
/// black-box scores as gains.
pub fn explain_ndcg(f_scores: &[f64], explanation: &Explanation, features: &FeatureMatrix) -> Result<f64> {
    let ordering = g_ranking(explanation, features)?.ordering;
    Ok(ndcg_at_k(&ordering, &min_max_normalize(f_scores), EXPLAIN_NDCG_CUTOFF))
}

/// `8 / k`, rewarding smaller explanations.
pub fn interpretability(k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidInput("interpretability of an empty explanation".into()));
    }
    Ok(8.0 / k as f64)
}

/// An explanation system under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum System {
    RankLime,
    AveragedExs,
    WeightedExs,
    Topk,
    Random,
}

impl System {
    pub const ALL: [System; 5] = [System::RankLime, System::AveragedExs, System::WeightedExs, System::Topk, System::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            System::RankLime => "rank-lime",
            System::AveragedExs => "averaged-exs",
            System::WeightedExs => "weighted-exs",
            System::Topk => "topk",
            System::Random => "random",
        }
    }
}

impl std::fmt::Display for System {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for System {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        System::ALL
            .into_iter()
            .find(|sys| sys.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown system '{s}'")))
    }
}

/// Instances to explain, with what is needed to build their spaces.
#[derive(Debug, Clone)]
pub enum Dataset {
    Text { vocab: Vocabulary, stats: CorpusStats, instances: Vec<Instance> },
    Tabular { feature_names: Vec<String>, instances: Vec<TabularInstance> },
}

impl Dataset {
    pub fn len(&self) -> usize {
        match self {
            Dataset::Text { instances, .. } => instances.len(),
            Dataset::Tabular { instances, .. } => instances.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn subject(&self, index: usize) -> Subject<'_> {
        match self {
            Dataset::Text { vocab, stats, instances } => Subject::Text { instance: &instances[index], vocab, stats },
            Dataset::Tabular { instances, .. } => Subject::Tabular(&instances[index]),
        }
    }

    /// Explanation space of instance `index`.
    pub fn space(&self, index: usize, kind: SpaceKind) -> Result<FeatureSpace> {
        match (self, kind) {
            (Dataset::Text { vocab, instances, .. }, SpaceKind::Words) => Ok(FeatureSpace::words(&instances[index], vocab)),
            (Dataset::Text { .. }, SpaceKind::Engineered) => Ok(FeatureSpace::engineered()),
            (Dataset::Tabular { feature_names, .. }, SpaceKind::Engineered) => Ok(FeatureSpace::tabular(feature_names.clone())),
            (Dataset::Tabular { .. }, SpaceKind::Words) => {
                Err(Error::InvalidInput("word spaces need text instances".into()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub explainer: ExplainerConfig,
    pub space: SpaceKind,
    pub transform: RelevanceTransform,
    pub topk_search: SubsetSearch,
    /// Instances used, from the start of the dataset.
    pub instance_limit: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            explainer: ExplainerConfig::default(),
            space: SpaceKind::Words,
            transform: RelevanceTransform::ScoreBased,
            topk_search: SubsetSearch::Greedy,
            instance_limit: 50,
        }
    }
}

/// Explanation of one instance by one system.
pub fn explain_with(
    system: System,
    subject: Subject<'_>,
    ranker: &dyn Ranker,
    space: &FeatureSpace,
    config: &BenchmarkConfig,
    seed: u64,
) -> Result<Explanation> {
    let k = config.explainer.k;
    match system {
        System::RankLime => fit(subject, ranker, space, &ExplainerConfig { seed, ..config.explainer.clone() }),
        System::AveragedExs | System::WeightedExs => {
            let per_doc = exs_per_document(subject, ranker, config.transform, space, seed)?;
            let scores = subject.original_scores(ranker)?;
            let features = subject.feature_matrix(space)?;
            let mode = if system == System::AveragedExs { Aggregation::Averaged } else { Aggregation::Weighted };
            aggregate_exs(subject.id(), &per_doc, mode, &scores, space, &features, k)
        }
        System::Topk => topk_features(subject, ranker, space, k, config.topk_search),
        System::Random => random_for(subject, ranker, space, k, seed),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub ranker: String,
    pub system: System,
    pub instance_id: String,
    pub fidelity: f64,
    pub explain_ndcg: f64,
    pub interpretability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub ranker: String,
    pub system: System,
    pub instance_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub ranker: String,
    pub system: System,
    pub instances: usize,
    pub fidelity: f64,
    pub explain_ndcg: f64,
    pub interpretability: f64,
}

impl Aggregate {
    fn of(ranker: &str, system: System, rows: &[&InstanceResult]) -> Self {
        let n = rows.len().max(1) as f64;
        let mean = |f: fn(&InstanceResult) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
        Self {
            ranker: ranker.to_owned(),
            system,
            instances: rows.len(),
            fidelity: mean(|r| r.fidelity),
            explain_ndcg: mean(|r| r.explain_ndcg),
            interpretability: mean(|r| r.interpretability),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub results: Vec<InstanceResult>,
    pub aggregates: Vec<Aggregate>,
    pub failures: Vec<Failure>,
}

impl EvalReport {
    /// Averages `results` per (ranker, system), in order of first appearance.
    pub fn from_results(results: Vec<InstanceResult>, failures: Vec<Failure>) -> Self {
        let mut keys: Vec<(&str, System)> = Vec::new();
        for r in &results {
            if !keys.contains(&(r.ranker.as_str(), r.system)) {
                keys.push((r.ranker.as_str(), r.system));
            }
        }
        let aggregates = keys
            .into_iter()
            .map(|(ranker, system)| {
                let rows: Vec<&InstanceResult> =
                    results.iter().filter(|r| r.ranker == ranker && r.system == system).collect();
                Aggregate::of(ranker, system, &rows)
            })
            .collect();
        Self { results, aggregates, failures }
    }

    pub fn aggregate(&self, ranker: &str, system: System) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.ranker == ranker && a.system == system)
    }

    /// Aligned plain-text table of the aggregates.
    pub fn table(&self) -> String {
        let header = ["Ranker", "System", "Fidelity", "Explain-NDCG", "Intly"];
        let rows: Vec<[String; 5]> = self
            .aggregates
            .iter()
            .map(|a| {
                [
                    a.ranker.clone(),
                    a.system.to_string(),
                    format!("{:.4}", a.fidelity),
                    format!("{:.4}", a.explain_ndcg),
                    format!("{:.4}", a.interpretability),
                ]
            })
            .collect();
        let widths: Vec<usize> =
            (0..5).map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0)).collect();
        let line = |cells: [&str; 5]| {
            let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            padded.join(" | ").trim_end().to_string()
        };
        let mut out = line(header);
        out.push('\n');
        out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-|-"));
        out.push('\n');
        for r in &rows {
            out.push_str(&line([&r[0], &r[1], &r[2], &r[3], &r[4]]));
            out.push('\n');
        }
        if !self.failures.is_empty() {
            let _ = writeln!(out, "{} failed explanation(s)", self.failures.len());
        }
        out
    }
}

/// Scores one explanation on its instance.
pub fn score_explanation(
    subject: Subject<'_>,
    ranker: &dyn Ranker,
    space: &FeatureSpace,
    explanation: &Explanation,
) -> Result<(f64, f64, f64)> {
    let f = subject.original_scores(ranker)?;
    let features = subject.feature_matrix(space)?;
    Ok((
        fidelity(&f, explanation, &features)?,
        explain_ndcg(&f, explanation, &features)?,
        interpretability(explanation.len().max(1))?,
    ))
}

/// Explains the first `instance_limit` instances with every (ranker,
/// system) pair and scores the explanations. Instance `i` uses seed
/// `seed + i`. Failures are recorded and skipped.
pub fn run_benchmark(
    dataset: &Dataset,
    rankers: &[(String, &dyn Ranker)],
    systems: &[System],
    config: &BenchmarkConfig,
    seed: u64,
) -> Result<EvalReport> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let count = dataset.len().min(config.instance_limit);
    let mut report = EvalReport::default();
    for (name, ranker) in rankers {
        for &system in systems {
            let first = report.results.len();
            for index in 0..count {
                let subject = dataset.subject(index);
                let outcome = dataset.space(index, config.space).and_then(|space| {
                    let e = explain_with(system, subject, *ranker, &space, config, seed.wrapping_add(index as u64))?;
                    score_explanation(subject, *ranker, &space, &e)
                });
                match outcome {
                    Ok((fidelity, explain_ndcg, interpretability)) => report.results.push(InstanceResult {
                        ranker: name.clone(),
                        system,
                        instance_id: subject.id().to_string(),
                        fidelity,
                        explain_ndcg,
                        interpretability,
                    }),
                    Err(e) => {
                        log::warn!("{name}/{system} failed on {}: {e}", subject.id());
                        report.failures.push(Failure {
                            ranker: name.clone(),
                            system,
                            instance_id: subject.id().to_string(),
                            error: e.to_string(),
                        });
                    }
                }
            }
            let block: Vec<&InstanceResult> = report.results[first..].iter().collect();
            if !block.is_empty() {
                let aggregate = Aggregate::of(name, system, &block);
                report.aggregates.push(aggregate);
            }
        }
    }
    Ok(report)
}
