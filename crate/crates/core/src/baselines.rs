//! Competing explanation systems: random attributions, pointwise
//! perturbation explanations aggregated over a list, and greedy feature
//! subset selection.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::explanation_scores;
use crate::explain::{cosine_distance, score_tau, sparsify, Explanation};
use crate::features::{FeatureSpace, SpaceKind};
use crate::instance::rank_from_scores;
use crate::perturb::{mask_features, Subject, DEFAULT_EDIT_BUDGET};
use crate::rankers::Ranker;

/// Kernel width on the cosine distance of the perturbed document.
pub const EXS_KERNEL_WIDTH: f64 = 0.25;
/// Ridge penalty of the pointwise surrogate.
pub const EXS_RIDGE_ALPHA: f64 = 1.0;
/// Largest space accepted by exhaustive subset search.
pub const EXHAUSTIVE_TOPK_LIMIT: usize = 20;

/// Turns a perturbed document's score into a relevance probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum RelevanceTransform {
    /// 1 when the perturbed document still beats the k-th original document.
    TopKBinary { k: usize },
    /// Score relative to the original top score.
    ScoreBased,
    /// Linear decay with the perturbed document's rank inside the top k.
    RankBased { k: usize },
}

impl Default for RelevanceTransform {
    fn default() -> Self {
        RelevanceTransform::ScoreBased
    }
}

/// Relevance of document `doc` after perturbation, given its new score and
/// the original scores of the list.
pub fn exs_relevance(transform: RelevanceTransform, perturbed_score: f64, doc: usize, originals: &[f64]) -> Result<f64> {
    let ranking = rank_from_scores(originals)?;
    let kth = |k: usize| -> Result<f64> {
        if k == 0 {
            return Err(Error::InvalidInput("relevance cutoff k must be at least 1".into()));
        }
        Ok(originals[ranking.ordering[k.min(originals.len()) - 1]])
    };
    match transform {
        RelevanceTransform::TopKBinary { k } => Ok(if perturbed_score > kth(k)? { 1.0 } else { 0.0 }),
        RelevanceTransform::ScoreBased => {
            let top = originals[ranking.ordering[0]];
            if top <= 0.0 {
                return Err(Error::NonPositiveTopScore(top));
            }
            if perturbed_score >= top {
                return Ok(1.0);
            }
            Ok((1.0 - (top - perturbed_score) / top).clamp(0.0, 1.0))
        }
        RelevanceTransform::RankBased { k } => {
            if perturbed_score <= kth(k)? {
                return Ok(0.0);
            }
            let rank = 1 + originals.iter().enumerate().filter(|&(d, &s)| d != doc && s > perturbed_score).count();
            Ok((1.0 - rank as f64 / k as f64).clamp(0.0, 1.0))
        }
    }
}

/// Weighted ridge regression with an unpenalized intercept; returns the
/// slopes.
pub fn weighted_ridge(x: &[Vec<f64>], y: &[f64], weights: &[f64], alpha: f64) -> Result<Vec<f64>> {
    let n = x.len();
    let m = x.first().map_or(0, Vec::len);
    if m == 0 || n == 0 {
        return Ok(vec![0.0; m]);
    }
    let total: f64 = weights.iter().sum();
    let mean_x: Vec<f64> = (0..m).map(|c| x.iter().zip(weights).map(|(r, w)| w * r[c]).sum::<f64>() / total).collect();
    let mean_y = y.iter().zip(weights).map(|(v, w)| w * v).sum::<f64>() / total;
    let mut gram = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    for ((row, &target), &w) in x.iter().zip(y).zip(weights) {
        let centered: Vec<f64> = row.iter().zip(&mean_x).map(|(v, mu)| v - mu).collect();
        let yc = target - mean_y;
        for i in 0..m {
            rhs[i] += w * centered[i] * yc;
            for j in 0..m {
                gram[(i, j)] += w * centered[i] * centered[j];
            }
        }
    }
    for i in 0..m {
        gram[(i, i)] += alpha;
    }
    let solution = gram.cholesky().ok_or(Error::Factorization)?.solve(&rhs);
    Ok(solution.iter().copied().collect())
}

/// Pointwise explanation of one document: random binary masks over the
/// features present in that document, each scored through the ranker and
/// mapped to a relevance value, then a kernel-weighted ridge fit. Returns a
/// weight per space feature (zero for absent features).
#[allow(clippy::too_many_arguments)]
pub fn exs_pointwise_explain(
    subject: Subject<'_>,
    doc: usize,
    ranker: &dyn Ranker,
    transform: RelevanceTransform,
    space: &FeatureSpace,
    samples_per_doc: Option<usize>,
    seed: u64,
) -> Result<Vec<f64>> {
    let base = subject.feature_matrix(space)?;
    let originals = subject.original_scores(ranker)?;
    let row = &base[doc];
    let present: Vec<usize> = match space.kind() {
        SpaceKind::Words => (0..space.len()).filter(|&j| row[j] != 0.0).collect(),
        SpaceKind::Engineered => (0..space.len()).collect(),
    };
    let mp = present.len();
    let mut weights = vec![0.0; space.len()];
    if mp == 0 {
        return Ok(weights);
    }
    let count = samples_per_doc.unwrap_or(5 * mp).max(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut design = Vec::with_capacity(count);
    let mut targets = Vec::with_capacity(count);
    let mut kernel = Vec::with_capacity(count);
    for s in 0..count {
        let mut z = vec![1.0; mp];
        if s > 0 {
            let removed = rng.gen_range(1..=mp);
            for i in rand::seq::index::sample(&mut rng, mp, removed) {
                z[i] = 0.0;
            }
        }
        let mask: Vec<usize> = (0..mp).filter(|&i| z[i] == 0.0).map(|i| present[i]).collect();
        let input = mask_features(subject, space, ranker.input_kind(), &mask, Some(doc), DEFAULT_EDIT_BUDGET)?;
        let scores = subject.score(ranker, &input)?;
        let perturbed_row = &subject.features_of(space, &input)?[doc];
        let distance = cosine_distance(row, perturbed_row)?;
        targets.push(exs_relevance(transform, scores[doc], doc, &originals)?);
        kernel.push((-(distance * distance) / (EXS_KERNEL_WIDTH * EXS_KERNEL_WIDTH)).exp());
        design.push(z);
    }
    let slopes = weighted_ridge(&design, &targets, &kernel, EXS_RIDGE_ALPHA)?;
    for (i, &j) in present.iter().enumerate() {
        weights[j] = slopes[i];
    }
    Ok(weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Unweighted mean over documents.
    Averaged,
    /// Mean weighted by `score - min score`.
    Weighted,
    /// Mean weighted by `N - 1 - rank`.
    RankWeighted,
}

/// Combines per-document weight vectors into one list-level vector.
pub fn aggregate_weights(per_doc: &[Vec<f64>], mode: Aggregation, scores: &[f64]) -> Result<Vec<f64>> {
    let m = per_doc.first().map_or(0, Vec::len);
    if per_doc.len() != scores.len() {
        return Err(Error::DimensionMismatch { expected: scores.len(), actual: per_doc.len() });
    }
    let doc_weights: Vec<f64> = match mode {
        Aggregation::Averaged => vec![1.0; scores.len()],
        Aggregation::Weighted => {
            let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
            scores.iter().map(|s| s - min).collect()
        }
        Aggregation::RankWeighted => {
            let pos = rank_from_scores(scores)?.positions();
            pos.iter().map(|&p| (scores.len() - 1 - p) as f64).collect()
        }
    };
    let total: f64 = doc_weights.iter().sum();
    let doc_weights = if total > 0.0 { doc_weights } else { vec![1.0; scores.len()] };
    let total: f64 = doc_weights.iter().sum();
    Ok((0..m).map(|c| per_doc.iter().zip(&doc_weights).map(|(w, dw)| dw * w[c]).sum::<f64>() / total).collect())
}

/// Aggregated list explanation: top-`k` of the combined weights, normalized
/// so their magnitudes sum to one.
pub fn aggregate_exs(
    instance_id: &str,
    per_doc: &[Vec<f64>],
    mode: Aggregation,
    scores: &[f64],
    space: &FeatureSpace,
    anchor_features: &[Vec<f64>],
    k: usize,
) -> Result<Explanation> {
    let combined = aggregate_weights(per_doc, mode, scores)?;
    let (ids, w) = sparsify(&combined, k);
    let total: f64 = w.iter().map(|v| v.abs()).sum();
    let w: Vec<f64> = if total > 0.0 { w.iter().map(|v| v / total).collect() } else { w };
    let system = match mode {
        Aggregation::Averaged => "averaged-exs",
        Aggregation::Weighted => "weighted-exs",
        Aggregation::RankWeighted => "rank-weighted-exs",
    };
    let mut dense = vec![0.0; space.len()];
    ids.iter().zip(&w).for_each(|(&i, &v)| dense[i] = v);
    let fidelity = score_tau(scores, &explanation_scores(&dense, &anchor_features.to_vec()))?;
    Explanation::from_weights(instance_id, system, space, ids, w, fidelity)
}

/// Pointwise explanations for every document of the list.
pub fn exs_per_document(
    subject: Subject<'_>,
    ranker: &dyn Ranker,
    transform: RelevanceTransform,
    space: &FeatureSpace,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    (0..subject.doc_count())
        .map(|d| exs_pointwise_explain(subject, d, ranker, transform, space, None, seed.wrapping_add(d as u64)))
        .collect()
}

/// `k` distinct features with uniform random weights summing to one.
pub fn random_explanation(instance_id: &str, space: &FeatureSpace, k: usize, seed: u64) -> Result<Explanation> {
    if k > space.len() {
        return Err(Error::TooManyFeatures { requested: k, available: space.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<usize> = rand::seq::index::sample(&mut rng, space.len(), k).into_vec();
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(f64::EPSILON..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let w = raw.iter().map(|v| v / total).collect();
    Explanation::from_weights(instance_id, "random", space, ids, w, 0.0)
}

/// Random explanation with its training fidelity filled in.
pub fn random_for(subject: Subject<'_>, ranker: &dyn Ranker, space: &FeatureSpace, k: usize, seed: u64) -> Result<Explanation> {
    let mut e = random_explanation(subject.id(), space, k.min(space.len()), seed)?;
    let scores = subject.original_scores(ranker)?;
    let features = subject.feature_matrix(space)?;
    e.training_fidelity = score_tau(&scores, &explanation_scores(&e.dense_weights(space.len()), &features))?;
    Ok(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubsetSearch {
    Greedy,
    Exhaustive,
}

/// Validity and completeness of keeping only `subset`.
pub struct SubsetScorer<'a, 'b> {
    subject: Subject<'a>,
    ranker: &'b dyn Ranker,
    space: &'b FeatureSpace,
    original: Vec<f64>,
}

impl<'a, 'b> SubsetScorer<'a, 'b> {
    pub fn new(subject: Subject<'a>, ranker: &'b dyn Ranker, space: &'b FeatureSpace) -> Result<Self> {
        let original = subject.original_scores(ranker)?;
        Ok(Self { subject, ranker, space, original })
    }

    fn tau_with_mask(&self, mask: &[usize]) -> Result<f64> {
        let input = mask_features(self.subject, self.space, self.ranker.input_kind(), mask, None, DEFAULT_EDIT_BUDGET)?;
        score_tau(&self.original, &self.subject.score(self.ranker, &input)?)
    }

    /// Tau of the ranking with every feature outside `subset` masked.
    pub fn validity(&self, subset: &[usize]) -> Result<f64> {
        let outside: Vec<usize> = (0..self.space.len()).filter(|j| !subset.contains(j)).collect();
        self.tau_with_mask(&outside)
    }

    /// Negated tau of the ranking with the features of `subset` masked.
    pub fn completeness(&self, subset: &[usize]) -> Result<f64> {
        Ok(-self.tau_with_mask(subset)?)
    }

    pub fn objective(&self, subset: &[usize]) -> Result<f64> {
        Ok(self.validity(subset)? + self.completeness(subset)?)
    }
}

fn next_combination(c: &mut [usize], m: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < m - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Feature subset of size at most `k` maximizing validity plus
/// completeness, reported with uniform weights `1 / |S|`.
///
/// Greedy search adds the best feature per step and stops when no addition
/// strictly improves the objective. Exhaustive search prefers, among equal
/// objectives, smaller subsets and then the lexicographically smallest.
pub fn topk_features(
    subject: Subject<'_>,
    ranker: &dyn Ranker,
    space: &FeatureSpace,
    k: usize,
    search: SubsetSearch,
) -> Result<Explanation> {
    let m = space.len();
    let scorer = SubsetScorer::new(subject, ranker, space)?;
    let subset = match search {
        SubsetSearch::Greedy => {
            let mut chosen: Vec<usize> = Vec::new();
            let mut best = f64::NEG_INFINITY;
            while chosen.len() < k.min(m) {
                let mut step: Option<(f64, usize)> = None;
                for j in (0..m).filter(|j| !chosen.contains(j)) {
                    let mut trial = chosen.clone();
                    trial.push(j);
                    let value = scorer.objective(&trial)?;
                    if step.map_or(true, |(v, _)| value > v) {
                        step = Some((value, j));
                    }
                }
                match step {
                    Some((value, j)) if value > best => {
                        best = value;
                        chosen.push(j);
                    }
                    _ => break,
                }
            }
            chosen.sort_unstable();
            chosen
        }
        SubsetSearch::Exhaustive => {
            if m > EXHAUSTIVE_TOPK_LIMIT {
                return Err(Error::EnumerationBound { limit: EXHAUSTIVE_TOPK_LIMIT, actual: m });
            }
            let mut best: Option<(f64, Vec<usize>)> = None;
            for size in 1..=k.min(m) {
                let mut c: Vec<usize> = (0..size).collect();
                loop {
                    let value = scorer.objective(&c)?;
                    if best.as_ref().map_or(true, |(v, _)| value > *v) {
                        best = Some((value, c.clone()));
                    }
                    if !next_combination(&mut c, m) {
                        break;
                    }
                }
            }
            best.map(|b| b.1).unwrap_or_default()
        }
    };
    let features = subject.feature_matrix(space)?;
    let w = if subset.is_empty() { Vec::new() } else { vec![1.0 / subset.len() as f64; subset.len()] };
    let mut dense = vec![0.0; m];
    subset.iter().zip(&w).for_each(|(&i, &v)| dense[i] = v);
    let fidelity = score_tau(&scorer.original, &explanation_scores(&dense, &features))?;
    Explanation::from_weights(subject.id(), "topk", space, subset, w, fidelity)
}
