//! The perturbation neighbourhood of an instance.
//!
//! Perturbations are drawn in the explanation space (masks over feature ids,
//! optionally with correlated value changes), mapped back onto the ranker's
//! input, and scored by the black-box ranker. Sample 0 is always the
//! unperturbed instance.

pub mod covariance;
pub mod edit;

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use covariance::{estimate_covariance, sample_correlated, CovarianceEstimate, PSD_JITTER};
pub use edit::{apply_circuitous, apply_circuitous_per_doc, apply_direct, DEFAULT_EDIT_BUDGET};

use crate::error::{Error, Result};
use crate::features::{
    compute_engineered, feature_matrix, query_row, FeatureMatrix, FeatureSpace, SpaceKind, TabularInstance,
    ENGINEERED_COUNT,
};
use crate::instance::{Instance, Vocabulary};
use crate::rankers::{CorpusStats, InputKind, Ranker, RankerInput};

/// What is being explained: a text instance or a tabular query.
#[derive(Debug, Clone, Copy)]
pub enum Subject<'a> {
    Text { instance: &'a Instance, vocab: &'a Vocabulary, stats: &'a CorpusStats },
    Tabular(&'a TabularInstance),
}

impl<'a> Subject<'a> {
    pub fn id(&self) -> &str {
        match self {
            Subject::Text { instance, .. } => instance.id(),
            Subject::Tabular(t) => &t.id,
        }
    }

    pub fn doc_count(&self) -> usize {
        match self {
            Subject::Text { instance, .. } => instance.len(),
            Subject::Tabular(t) => t.len(),
        }
    }

    /// Ranker input of the unperturbed subject.
    pub fn original_input(&self) -> PerturbedInput {
        match self {
            Subject::Text { instance, .. } => PerturbedInput::Text((*instance).clone()),
            Subject::Tabular(t) => PerturbedInput::Rows(t.rows.clone()),
        }
    }

    /// Black-box scores of the unperturbed subject.
    pub fn original_scores(&self, ranker: &dyn Ranker) -> Result<Vec<f64>> {
        self.score(ranker, &self.original_input())
    }

    /// Explanation-space feature matrix of the unperturbed subject.
    pub fn feature_matrix(&self, space: &FeatureSpace) -> Result<FeatureMatrix> {
        self.features_of(space, &self.original_input())
    }

    /// Explanation-space feature matrix of a (perturbed) ranker input.
    pub fn features_of(&self, space: &FeatureSpace, input: &PerturbedInput) -> Result<FeatureMatrix> {
        match (self, input) {
            (Subject::Text { stats, .. }, PerturbedInput::Text(inst)) => feature_matrix(inst, space, stats),
            (_, PerturbedInput::Rows(rows)) => Ok(rows.iter().map(|r| space.select(r)).collect()),
            (Subject::Tabular(_), PerturbedInput::Text(_)) => {
                Err(Error::InvalidInput("tabular subject cannot carry text".into()))
            }
        }
    }

    /// Query representation in the explanation space (empty when the space
    /// has none).
    pub fn query_row_of(&self, space: &FeatureSpace, input: &PerturbedInput) -> Vec<f64> {
        match input {
            PerturbedInput::Text(inst) => query_row(inst, space),
            PerturbedInput::Rows(_) => Vec::new(),
        }
    }

    /// Scores a ranker input, converting text to engineered rows for tabular
    /// rankers.
    pub fn score(&self, ranker: &dyn Ranker, input: &PerturbedInput) -> Result<Vec<f64>> {
        let scores = match (input, ranker.input_kind()) {
            (PerturbedInput::Text(inst), InputKind::Text) => ranker.score(RankerInput::Text(inst))?,
            (PerturbedInput::Text(inst), InputKind::Tabular) => {
                let rows = self.engineered_rows(inst)?;
                ranker.score(RankerInput::Tabular { query: inst.id(), rows: &rows })?
            }
            (PerturbedInput::Rows(rows), InputKind::Tabular) => {
                ranker.score(RankerInput::Tabular { query: self.id(), rows })?
            }
            (PerturbedInput::Rows(_), InputKind::Text) => {
                return Err(Error::InvalidInput("text ranker cannot score feature rows".into()))
            }
        };
        if scores.len() != self.doc_count() {
            return Err(Error::ScoreCountMismatch { expected: self.doc_count(), actual: scores.len() });
        }
        crate::instance::rank_from_scores(&scores)?;
        Ok(scores)
    }

    /// Full engineered catalog rows of a text instance.
    pub fn engineered_rows(&self, inst: &Instance) -> Result<FeatureMatrix> {
        let Subject::Text { stats, .. } = self else {
            return Err(Error::InvalidInput("engineered rows need a text subject".into()));
        };
        inst.documents
            .iter()
            .map(|d| compute_engineered(&inst.query, d, stats).map(|r| r.to_vec()))
            .collect()
    }
}

/// A perturbed ranker input.
#[derive(Debug, Clone, PartialEq)]
pub enum PerturbedInput {
    Text(Instance),
    /// Full feature rows as consumed by a tabular ranker.
    Rows(FeatureMatrix),
}

/// The simplified input `z'` of a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimplifiedInput {
    /// Word space: retained fraction of every term (1 = intact).
    Fractions(Vec<f64>),
    /// Engineered space: achieved per-document feature deltas.
    Deltas(FeatureMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedSample {
    pub z: SimplifiedInput,
    /// Explanation-space features of the perturbed instance, one row per document.
    pub features: FeatureMatrix,
    /// Explanation-space query row (word spaces only).
    pub query_row: Vec<f64>,
    pub input: PerturbedInput,
    pub f_scores: Vec<f64>,
    /// Locality weight, filled in by the explainer.
    pub kernel_weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskMode {
    Single,
    Group,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbStyle {
    /// Zero the selected features.
    Mask,
    /// Move the selected features by correlated Gaussian deltas.
    ValueDelta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationPlan {
    pub mode: MaskMode,
    pub style: PerturbStyle,
    /// Total samples including the anchor; `None` means `5 * M`.
    pub count: Option<usize>,
    /// Inclusive group size range; `None` means `2..=max(2, M / 4)`.
    pub group_size: Option<(usize, usize)>,
    /// Feature covariance indexed by source column (engineered spaces). When
    /// absent it is estimated from the instance itself.
    pub covariance: Option<CovarianceEstimate>,
    /// Word-edit budget per document for circuitous perturbations.
    pub edit_budget: usize,
}

impl Default for PerturbationPlan {
    fn default() -> Self {
        Self {
            mode: MaskMode::Group,
            style: PerturbStyle::Mask,
            count: None,
            group_size: None,
            covariance: None,
            edit_budget: DEFAULT_EDIT_BUDGET,
        }
    }
}

impl PerturbationPlan {
    pub fn single() -> Self {
        Self { mode: MaskMode::Single, ..Self::default() }
    }

    pub fn group() -> Self {
        Self::default()
    }

    pub fn sample_count(&self, m: usize) -> usize {
        self.count.unwrap_or(5 * m).max(1)
    }

    pub fn group_range(&self, m: usize) -> (usize, usize) {
        self.group_size.unwrap_or((2, 2.max(m / 4)))
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Feature index sets to perturb, without duplicates.
///
/// Both modes start with the singletons `{0}, {1}, ...`. Single mode stops
/// there, so it yields at most `M` sets. Group mode continues with random
/// subsets whose size is uniform in `size_range`; when the range cannot
/// supply enough distinct subsets its upper end is widened toward `M`, and
/// the result is capped at the `2^M - 1` non-empty subsets.
pub fn make_masks(m: usize, mode: MaskMode, count: usize, size_range: (usize, usize), rng: &mut impl Rng) -> Vec<Vec<usize>> {
    let mut masks: Vec<Vec<usize>> = (0..m.min(count)).map(|i| vec![i]).collect();
    if mode == MaskMode::Single || masks.len() >= count {
        return masks;
    }
    let mut seen: HashSet<Vec<usize>> = masks.iter().cloned().collect();
    let lo = size_range.0.clamp(2, m.max(2));
    let mut hi = size_range.1.clamp(lo, m.max(lo));
    let available = |hi: usize| (lo..=hi.min(m)).map(|s| binomial(m, s)).sum::<f64>() + m as f64;
    while (available(hi) as usize) < count && hi < m {
        hi += 1;
    }
    let cap = available(hi).min(count as f64) as usize;
    if lo > m {
        return masks;
    }
    let features: Vec<usize> = (0..m).collect();
    while masks.len() < cap {
        let size = rng.gen_range(lo..=hi);
        let mut set: Vec<usize> = features.choose_multiple(rng, size).copied().collect();
        set.sort_unstable();
        if seen.insert(set.clone()) {
            masks.push(set);
        }
    }
    masks
}

/// Per-column max normalization, used to express word-count covariance in
/// relative units.
fn relative_rows(rows: &FeatureMatrix) -> FeatureMatrix {
    let m = rows.first().map_or(0, Vec::len);
    let max: Vec<f64> = (0..m).map(|c| rows.iter().map(|r| r[c]).fold(0.0, f64::max)).collect();
    rows.iter()
        .map(|r| r.iter().zip(&max).map(|(v, mx)| if *mx > 0.0 { v / mx } else { 0.0 }).collect())
        .collect()
}

fn restrict_covariance(cov: &CovarianceEstimate, cols: &[usize]) -> CovarianceEstimate {
    CovarianceEstimate {
        sigma: cols.iter().map(|&i| cols.iter().map(|&j| cov.sigma[i][j]).collect()).collect(),
        mean: cols.iter().map(|&i| cov.mean[i]).collect(),
        sample_count: cov.sample_count,
        degenerate: cov.degenerate,
    }
}

/// Builds the perturbation neighbourhood of `subject` in `space` and scores
/// every sample with `ranker`. Sample 0 is the unperturbed anchor.
pub fn generate_perturbations(
    subject: Subject<'_>,
    space: &FeatureSpace,
    ranker: &dyn Ranker,
    plan: &PerturbationPlan,
    seed: u64,
) -> Result<Vec<PerturbedSample>> {
    let m = space.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = plan.sample_count(m);
    let masks = if m == 0 { Vec::new() } else { make_masks(m, plan.mode, total - 1, plan.group_range(m), &mut rng) };

    let original = subject.original_input();
    let base_features = subject.features_of(space, &original)?;
    let anchor_scores = subject.score(ranker, &original).map_err(|e| Error::Sample { index: 0, source: Box::new(e) })?;
    let mut samples = vec![PerturbedSample {
        z: match space.kind() {
            SpaceKind::Words => SimplifiedInput::Fractions(vec![1.0; m]),
            SpaceKind::Engineered => SimplifiedInput::Deltas(vec![vec![0.0; m]; subject.doc_count()]),
        },
        query_row: subject.query_row_of(space, &original),
        features: base_features.clone(),
        input: original.clone(),
        f_scores: anchor_scores,
        kernel_weight: 1.0,
    }];
    if masks.is_empty() {
        return Ok(samples);
    }

    let perturbation_count = match plan.style {
        PerturbStyle::Mask => masks.len(),
        PerturbStyle::ValueDelta => total - 1,
    };
    let covariance = match plan.style {
        PerturbStyle::Mask => None,
        PerturbStyle::ValueDelta => Some(match (&plan.covariance, space.kind()) {
            (Some(cov), SpaceKind::Engineered) => restrict_covariance(cov, space.source()),
            (_, SpaceKind::Words) => estimate_covariance(&relative_rows(&base_features))?,
            (None, SpaceKind::Engineered) => estimate_covariance(&base_features)?,
        }),
    };

    for k in 0..perturbation_count {
        let index = k + 1;
        let mask = &masks[k % masks.len()];
        let draw_seed: u64 = rng.gen();
        let sample = build_sample(subject, space, ranker, plan, mask, covariance.as_ref(), draw_seed, &original, &base_features)
            .map_err(|e| Error::Sample { index, source: Box::new(e) })?;
        samples.push(sample);
    }
    Ok(samples)
}

#[allow(clippy::too_many_arguments)]
fn build_sample(
    subject: Subject<'_>,
    space: &FeatureSpace,
    ranker: &dyn Ranker,
    plan: &PerturbationPlan,
    mask: &[usize],
    covariance: Option<&CovarianceEstimate>,
    draw_seed: u64,
    original: &PerturbedInput,
    base_features: &FeatureMatrix,
) -> Result<PerturbedSample> {
    let m = space.len();
    let n_docs = subject.doc_count();
    let (z, input) = match (space.kind(), subject) {
        (SpaceKind::Words, Subject::Text { instance, vocab, .. }) => {
            let mut fractions = vec![1.0; m];
            match covariance {
                None => mask.iter().for_each(|&j| fractions[j] = 0.0),
                Some(cov) => {
                    let delta = &sample_correlated(cov, 1, draw_seed)?[0];
                    mask.iter().for_each(|&j| fractions[j] = (1.0 + delta[j]).clamp(0.0, 2.0));
                }
            }
            let edited = apply_direct(instance, space, &fractions, vocab);
            (SimplifiedInput::Fractions(fractions), PerturbedInput::Text(edited))
        }
        (SpaceKind::Words, Subject::Tabular(_)) => {
            return Err(Error::InvalidInput("word spaces need a text subject".into()))
        }
        (SpaceKind::Engineered, _) => {
            // requested per-document deltas in explanation space
            let deltas: FeatureMatrix = match covariance {
                None => base_features
                    .iter()
                    .map(|row| (0..m).map(|j| if mask.contains(&j) { -row[j] } else { 0.0 }).collect())
                    .collect(),
                Some(cov) => sample_correlated(cov, n_docs, draw_seed)?
                    .into_iter()
                    .map(|d| (0..m).map(|j| if mask.contains(&j) { d[j] } else { 0.0 }).collect())
                    .collect(),
            };
            let text_to_text = matches!(subject, Subject::Text { .. }) && ranker.input_kind() == InputKind::Text;
            if text_to_text {
                let Subject::Text { instance, vocab, stats } = subject else { unreachable!() };
                // only the perturbed features are constrained
                let targets: Vec<Vec<Option<f64>>> = deltas
                    .iter()
                    .map(|d| {
                        let mut full = vec![None; ENGINEERED_COUNT];
                        for &j in mask {
                            full[space.source()[j]] = Some(d[j]);
                        }
                        full
                    })
                    .collect();
                let (edited, _) = apply_circuitous_per_doc(instance, space, &targets, stats, plan.edit_budget, vocab)?;
                (SimplifiedInput::Deltas(Vec::new()), PerturbedInput::Text(edited))
            } else {
                let mut rows = match original {
                    PerturbedInput::Rows(rows) => rows.clone(),
                    PerturbedInput::Text(inst) => subject.engineered_rows(inst)?,
                };
                for (row, d) in rows.iter_mut().zip(&deltas) {
                    for (j, &src) in space.source().iter().enumerate() {
                        row[src] += d[j];
                    }
                }
                (SimplifiedInput::Deltas(Vec::new()), PerturbedInput::Rows(rows))
            }
        }
    };
    let features = subject.features_of(space, &input)?;
    let z = match z {
        SimplifiedInput::Deltas(_) => SimplifiedInput::Deltas(
            features
                .iter()
                .zip(base_features)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect(),
        ),
        other => other,
    };
    let f_scores = subject.score(ranker, &input)?;
    Ok(PerturbedSample { z, query_row: subject.query_row_of(space, &input), features, input, f_scores, kernel_weight: 1.0 })
}

/// Zeroes the features in `mask`, in every document (and the query of a
/// word space) or only in document `doc`.
///
/// Word features are removed from the text; engineered features of a text
/// instance scored as text are driven to zero by word edits; feature rows
/// have their source columns set to zero.
pub fn mask_features(
    subject: Subject<'_>,
    space: &FeatureSpace,
    ranker_kind: InputKind,
    mask: &[usize],
    doc: Option<usize>,
    edit_budget: usize,
) -> Result<PerturbedInput> {
    let in_scope = |d: usize| doc.map_or(true, |t| t == d);
    match (space.kind(), subject) {
        (SpaceKind::Words, Subject::Text { instance, vocab, .. }) => {
            if doc.is_none() {
                let mut z = vec![1.0; space.len()];
                mask.iter().for_each(|&j| z[j] = 0.0);
                return Ok(PerturbedInput::Text(apply_direct(instance, space, &z, vocab)));
            }
            let terms: HashSet<usize> = mask.iter().map(|&j| space.source()[j]).collect();
            let documents = instance
                .documents
                .iter()
                .enumerate()
                .map(|(d, document)| {
                    if !in_scope(d) {
                        return document.clone();
                    }
                    let bow = document.bow.iter().filter(|(t, _)| !terms.contains(t)).map(|(&t, &c)| (t, c)).collect();
                    edit::rebuild_document(document, &bow, vocab)
                })
                .collect();
            Ok(PerturbedInput::Text(Instance { query: instance.query.clone(), documents }))
        }
        (SpaceKind::Words, Subject::Tabular(_)) => Err(Error::InvalidInput("word spaces need a text subject".into())),
        (SpaceKind::Engineered, Subject::Text { instance, vocab, stats }) if ranker_kind == InputKind::Text => {
            let base = feature_matrix(instance, space, stats)?;
            let targets: Vec<Vec<Option<f64>>> = base
                .iter()
                .enumerate()
                .map(|(d, row)| {
                    let mut full = vec![None; ENGINEERED_COUNT];
                    if in_scope(d) {
                        for &j in mask {
                            full[space.source()[j]] = Some(-row[j]);
                        }
                    }
                    full
                })
                .collect();
            let (edited, _) = apply_circuitous_per_doc(instance, space, &targets, stats, edit_budget, vocab)?;
            Ok(PerturbedInput::Text(edited))
        }
        (SpaceKind::Engineered, _) => {
            let mut rows = match subject.original_input() {
                PerturbedInput::Rows(rows) => rows,
                PerturbedInput::Text(inst) => subject.engineered_rows(&inst)?,
            };
            for (d, row) in rows.iter_mut().enumerate() {
                if in_scope(d) {
                    for &j in mask {
                        row[space.source()[j]] = 0.0;
                    }
                }
            }
            Ok(PerturbedInput::Rows(rows))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Document;
    use crate::rankers::{Bm25Ranker, LinearTabularModel, RankerHandle};

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    #[test]
    fn single_masks_enumerate() {
        assert_eq!(make_masks(3, MaskMode::Single, 3, (2, 2), &mut rng()), vec![vec![0], vec![1], vec![2]]);
        assert_eq!(make_masks(3, MaskMode::Single, 10, (2, 2), &mut rng()).len(), 3);
    }

    #[test]
    fn group_masks_distinct_and_cover_singletons() {
        let masks = make_masks(6, MaskMode::Group, 30, (2, 2), &mut rng());
        assert_eq!(masks.len(), 30);
        for i in 0..6 {
            assert!(masks.contains(&vec![i]));
        }
        let set: HashSet<_> = masks.iter().collect();
        assert_eq!(set.len(), masks.len());
        assert!(masks.iter().all(|m| !m.is_empty()));
    }

    #[test]
    fn five_n_budget_distinct() {
        let masks = make_masks(10, MaskMode::Group, 50, (2, 2), &mut rng());
        assert_eq!(masks.len(), 50);
        assert_eq!(masks.iter().collect::<HashSet<_>>().len(), 50);
        // M = 4 has only 15 non-empty subsets
        let masks = make_masks(4, MaskMode::Group, 20, (2, 2), &mut rng());
        assert_eq!(masks.len(), 15);
        assert_eq!(masks.iter().collect::<HashSet<_>>().len(), 15);
        let masks = make_masks(5, MaskMode::Group, 25, (2, 2), &mut rng());
        assert_eq!(masks.len(), 25);
    }

    fn text_subject() -> (Vocabulary, Instance, CorpusStats) {
        let texts = [
            "cheap flights to paris in spring",
            "paris hotel deals and flights",
            "weather in paris",
            "cheap cheap tickets",
        ];
        let vocab = Vocabulary::from_texts(texts.iter().copied().chain(["cheap paris flights"]));
        let docs: Vec<Document> =
            texts.iter().enumerate().map(|(i, t)| Document::new(format!("d{i}"), *t, &vocab)).collect();
        let stats = CorpusStats::from_documents(&docs);
        let inst = Instance::new(Document::new("q", "cheap paris flights", &vocab), docs).unwrap();
        (vocab, inst, stats)
    }

    #[test]
    fn word_perturbations_anchor_and_consistency() {
        let (vocab, inst, stats) = text_subject();
        let subject = Subject::Text { instance: &inst, vocab: &vocab, stats: &stats };
        let space = FeatureSpace::words(&inst, &vocab);
        let ranker = RankerHandle::Bm25(Bm25Ranker::new(stats.clone()));
        let samples = generate_perturbations(subject, &space, &ranker, &PerturbationPlan::group(), 7).unwrap();
        assert_eq!(samples.len(), 5 * space.len());
        assert_eq!(samples[0].f_scores, ranker.score(RankerInput::Text(&inst)).unwrap());
        assert_eq!(samples[0].z, SimplifiedInput::Fractions(vec![1.0; space.len()]));
        for s in &samples {
            let PerturbedInput::Text(p) = &s.input else { panic!() };
            assert_eq!(s.features, feature_matrix(p, &space, &stats).unwrap());
            let SimplifiedInput::Fractions(z) = &s.z else { panic!() };
            for (j, &t) in space.source().iter().enumerate() {
                if z[j] == 0.0 {
                    assert!(p.documents.iter().all(|d| d.count(t) == 0));
                }
            }
        }
        let again = generate_perturbations(subject, &space, &ranker, &PerturbationPlan::group(), 7).unwrap();
        assert_eq!(samples, again);
    }

    #[test]
    fn circuitous_samples_are_consistent() {
        let (vocab, inst, stats) = text_subject();
        let subject = Subject::Text { instance: &inst, vocab: &vocab, stats: &stats };
        let space = FeatureSpace::engineered();
        let ranker = RankerHandle::Bm25(Bm25Ranker::new(stats.clone()));
        let samples = generate_perturbations(subject, &space, &ranker, &PerturbationPlan::group(), 3).unwrap();
        assert_eq!(samples.len(), 5 * 18);
        for s in &samples {
            let PerturbedInput::Text(p) = &s.input else { panic!("expected text") };
            assert_eq!(s.features, feature_matrix(p, &space, &stats).unwrap());
        }
    }

    #[test]
    fn value_delta_tabular() {
        let tab = TabularInstance {
            id: "q".into(),
            doc_ids: (0..4).map(|i| format!("d{i}")).collect(),
            rows: vec![vec![1.0, 0.0, 2.0], vec![0.5, 1.0, 0.0], vec![0.0, 2.0, 1.0], vec![1.5, 0.5, 0.5]],
        };
        let space = FeatureSpace::tabular(vec!["a".into(), "b".into(), "c".into()]);
        let ranker = RankerHandle::Linear(LinearTabularModel { weights: vec![1.0, -1.0, 0.5], bias: 0.0 });
        let plan = PerturbationPlan { style: PerturbStyle::ValueDelta, ..PerturbationPlan::group() };
        let samples = generate_perturbations(Subject::Tabular(&tab), &space, &ranker, &plan, 1).unwrap();
        assert_eq!(samples.len(), 15);
        for s in &samples[1..] {
            let PerturbedInput::Rows(rows) = &s.input else { panic!() };
            assert_eq!(&s.features, rows);
        }
    }

    #[test]
    fn ranker_failure_names_sample() {
        let tab = TabularInstance { id: "q".into(), doc_ids: vec!["a".into()], rows: vec![vec![1.0, 2.0]] };
        let space = FeatureSpace::tabular(vec!["a".into(), "b".into()]);
        let ranker = RankerHandle::Linear(LinearTabularModel { weights: vec![1.0], bias: 0.0 });
        let err = generate_perturbations(Subject::Tabular(&tab), &space, &ranker, &PerturbationPlan::group(), 1).unwrap_err();
        assert!(matches!(err, Error::Sample { index: 0, .. }));
    }
}
