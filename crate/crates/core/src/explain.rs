//! Listwise local surrogate fitting.
//!
//! A sparse linear scorer `g(z') = w . z'` is fitted to the black-box scores
//! of a perturbation neighbourhood by minimizing a kernel-weighted listwise
//! loss with an L1 penalty, then truncated to its `K` largest weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{explanation_scores, kendall_tau};
use crate::features::{FeatureMatrix, FeatureSpace};
use crate::instance::rank_from_scores;
use crate::losses::{LossKind, DEFAULT_TEMPERATURE};
use crate::perturb::{generate_perturbations, PerturbationPlan, PerturbedInput, PerturbedSample, Subject};
use crate::rankers::Ranker;

pub const DEFAULT_K: usize = 8;
pub const DEFAULT_L1: f64 = 0.01;
pub const DEFAULT_LEARNING_RATE: f64 = 0.05;
pub const DEFAULT_EPOCHS: usize = 500;

/// Representation the locality kernel measures distances in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelSpace {
    /// The explanation features of each sample.
    #[default]
    Explanation,
    /// The ranker's own input: instance word counts for text, full rows for
    /// tabular data.
    Input,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplainerConfig {
    pub loss: LossKind,
    /// Temperature of the smoothed NDCG losses.
    pub temperature: f64,
    /// Kernel width; `None` means `(N_docs + 1) / 4`.
    pub sigma: Option<f64>,
    pub k: usize,
    pub l1_lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub plan: PerturbationPlan,
    pub kernel_space: KernelSpace,
}

impl Default for ExplainerConfig {
    fn default() -> Self {
        Self {
            loss: LossKind::ApproxNdcg,
            temperature: DEFAULT_TEMPERATURE,
            sigma: None,
            k: DEFAULT_K,
            l1_lambda: DEFAULT_L1,
            learning_rate: DEFAULT_LEARNING_RATE,
            epochs: DEFAULT_EPOCHS,
            seed: 0,
            plan: PerturbationPlan::default(),
            kernel_space: KernelSpace::Explanation,
        }
    }
}

impl ExplainerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidInput("K must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidInput("epochs must be at least 1".into()));
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidInput(format!("kernel width must be positive, got {s}")));
            }
        }
        if !(self.l1_lambda >= 0.0) || !(self.learning_rate > 0.0) || !(self.temperature > 0.0) {
            return Err(Error::InvalidInput("l1_lambda, learning_rate and temperature out of range".into()));
        }
        Ok(())
    }

    pub fn sigma_for(&self, doc_count: usize) -> f64 {
        self.sigma.unwrap_or((doc_count as f64 + 1.0) / 4.0)
    }
}

/// A sparse attribution over the features of an explanation space.
#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    pub instance_id: String,
    pub system: String,
    /// Sorted by descending `|raw_weight|`.
    pub feature_ids: Vec<usize>,
    pub names: Vec<String>,
    pub raw_weights: Vec<f64>,
    /// `raw_weights / sum |raw_weights|`.
    pub display_weights: Vec<f64>,
    pub training_fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureWeight {
    pub id: usize,
    pub name: String,
    pub raw_weight: f64,
    pub display_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ExplanationJson {
    instance_id: String,
    system: String,
    features: Vec<FeatureWeight>,
    fidelity: f64,
}

impl Serialize for Explanation {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ExplanationJson {
            instance_id: self.instance_id.clone(),
            system: self.system.clone(),
            features: self.features(),
            fidelity: self.training_fidelity,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Explanation {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let j = ExplanationJson::deserialize(deserializer)?;
        Ok(Explanation {
            instance_id: j.instance_id,
            system: j.system,
            feature_ids: j.features.iter().map(|f| f.id).collect(),
            names: j.features.iter().map(|f| f.name.clone()).collect(),
            raw_weights: j.features.iter().map(|f| f.raw_weight).collect(),
            display_weights: j.features.iter().map(|f| f.display_weight).collect(),
            training_fidelity: j.fidelity,
        })
    }
}

impl Explanation {
    /// Builds an explanation from sparse weights, ordering features by
    /// descending magnitude and filling names and display weights.
    pub fn from_weights(
        instance_id: &str,
        system: &str,
        space: &FeatureSpace,
        ids: Vec<usize>,
        weights: Vec<f64>,
        training_fidelity: f64,
    ) -> Result<Self> {
        let mut pairs: Vec<(usize, f64)> = ids.into_iter().zip(weights).filter(|(_, w)| *w != 0.0).collect();
        pairs.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
        let raw_weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let display_weights = if raw_weights.is_empty() { Vec::new() } else { normalize_for_display(&raw_weights)? };
        Ok(Explanation {
            instance_id: instance_id.to_string(),
            system: system.to_string(),
            names: pairs.iter().map(|p| space.name(p.0).to_string()).collect(),
            feature_ids: pairs.into_iter().map(|p| p.0).collect(),
            raw_weights,
            display_weights,
            training_fidelity,
        })
    }

    pub fn len(&self) -> usize {
        self.feature_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.feature_ids.is_empty()
    }

    pub fn features(&self) -> Vec<FeatureWeight> {
        (0..self.len())
            .map(|i| FeatureWeight {
                id: self.feature_ids[i],
                name: self.names[i].clone(),
                raw_weight: self.raw_weights[i],
                display_weight: self.display_weights[i],
            })
            .collect()
    }

    /// Dense weight vector over a space of `m` features.
    pub fn dense_weights(&self, m: usize) -> Vec<f64> {
        let mut w = vec![0.0; m];
        for (&id, &v) in self.feature_ids.iter().zip(&self.raw_weights) {
            if id < m {
                w[id] = v;
            }
        }
        w
    }
}

/// `1 - cos(u, v)`; two zero vectors are at distance 0, one zero vector at 1.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: u.len(), actual: v.len() });
    }
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    match (nu == 0.0, nv == 0.0) {
        (true, true) => Ok(0.0),
        (true, false) | (false, true) => Ok(1.0),
        _ => {
            let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
            Ok((1.0 - dot / (nu * nv)).clamp(0.0, 2.0))
        }
    }
}

/// Exponential locality kernel over the summed query and document cosine
/// distances between the original and a perturbed representation.
pub fn proximity(
    original_query: &[f64],
    original_docs: &[Vec<f64>],
    perturbed_query: &[f64],
    perturbed_docs: &[Vec<f64>],
    sigma: f64,
) -> Result<f64> {
    if original_docs.len() != perturbed_docs.len() {
        return Err(Error::DimensionMismatch { expected: original_docs.len(), actual: perturbed_docs.len() });
    }
    let mut delta = cosine_distance(original_query, perturbed_query)?;
    for (a, b) in original_docs.iter().zip(perturbed_docs) {
        delta += cosine_distance(a, b)?;
    }
    Ok((-(delta * delta) / (sigma * sigma)).exp())
}

/// Indices of the `k` largest `|w|`, ties by ascending id, zeros dropped.
pub fn sparsify(weights: &[f64], k: usize) -> (Vec<usize>, Vec<f64>) {
    let mut ids: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] != 0.0).collect();
    ids.sort_by(|&a, &b| weights[b].abs().total_cmp(&weights[a].abs()).then(a.cmp(&b)));
    ids.truncate(k);
    let w = ids.iter().map(|&i| weights[i]).collect();
    (ids, w)
}

/// Scales weights so their absolute values sum to one.
pub fn normalize_for_display(raw: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = raw.iter().map(|w| w.abs()).sum();
    if !(total > 0.0) {
        return Err(Error::AllZeroWeights);
    }
    Ok(raw.iter().map(|w| w / total).collect())
}

/// Kendall's tau between the rankings induced by two score vectors.
pub fn score_tau(f_scores: &[f64], g_scores: &[f64]) -> Result<f64> {
    kendall_tau(&rank_from_scores(f_scores)?, &rank_from_scores(g_scores)?)
}

fn kernel_representation(
    subject: Subject<'_>,
    sample: &PerturbedSample,
    mode: KernelSpace,
    input_space: Option<&FeatureSpace>,
) -> Result<(Vec<f64>, FeatureMatrix)> {
    match (mode, &sample.input, input_space) {
        (KernelSpace::Input, PerturbedInput::Rows(rows), _) => Ok((Vec::new(), rows.clone())),
        (KernelSpace::Input, PerturbedInput::Text(inst), Some(words)) => {
            Ok((crate::features::query_row(inst, words), subject.features_of(words, &sample.input)?))
        }
        _ => Ok((sample.query_row.clone(), sample.features.clone())),
    }
}

/// Sets the locality weight of every sample relative to sample 0.
pub fn assign_kernel_weights(
    subject: Subject<'_>,
    samples: &mut [PerturbedSample],
    sigma: f64,
    mode: KernelSpace,
) -> Result<()> {
    let input_space = match (mode, subject) {
        (KernelSpace::Input, Subject::Text { instance, vocab, .. }) => Some(FeatureSpace::words(instance, vocab)),
        _ => None,
    };
    let Some(anchor) = samples.first() else { return Ok(()) };
    let (q0, d0) = kernel_representation(subject, anchor, mode, input_space.as_ref())?;
    for s in samples.iter_mut() {
        let (q, d) = kernel_representation(subject, s, mode, input_space.as_ref())?;
        s.kernel_weight = proximity(&q0, &d0, &q, &d, sigma)?;
    }
    Ok(())
}

// Scaled columns get RMS spread SCALE_GAIN. 2 converges within the default
// epoch budget on ListNet and RankNet; 3 oscillates.
const SCALE_GAIN: f64 = 2.0;

/// Per-feature scale used to precondition descent: the root mean square of
/// the feature's deviation from its per-sample document mean (1 when the
/// feature never varies across documents), over `SCALE_GAIN`. The listwise losses ignore
/// per-sample score shifts, so only this spread matters to the fit.
fn feature_scales(samples: &[PerturbedSample], m: usize) -> Vec<f64> {
    let mut acc = vec![0.0f64; m];
    let mut count = 0usize;
    for s in samples {
        let n = s.features.len() as f64;
        for c in 0..m {
            let mean = s.features.iter().map(|r| r[c]).sum::<f64>() / n;
            acc[c] += s.features.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>();
        }
        count += s.features.len();
    }
    acc.into_iter()
        .map(|a| {
            let rms = (a / count.max(1) as f64).sqrt();
            if rms > 0.0 { rms / SCALE_GAIN } else { 1.0 }
        })
        .collect()
}

/// Weighted training objective, data term only.
pub fn weighted_loss(samples: &[PerturbedSample], weights: &[f64], loss: LossKind, temperature: f64) -> Result<f64> {
    let total: f64 = samples.iter().map(|s| s.kernel_weight).sum();
    let mut acc = 0.0;
    for s in samples {
        let g = explanation_scores(weights, &s.features);
        acc += s.kernel_weight * loss.evaluate(&g, &s.f_scores, temperature)?.0;
    }
    Ok(acc / total)
}

/// Full-batch subgradient descent on the kernel-weighted loss plus
/// `l1_lambda * |w|_1`, starting from zero. The objective is divided by the
/// total kernel weight, which leaves its minimizer unchanged. Returns dense weights in the
/// original feature units.
///
/// Descent runs on features divided by [`feature_scales`], so a single
/// learning rate suits spaces whose columns differ in magnitude; the penalty
/// applies to the scaled weights.
pub fn fit_weights(samples: &[PerturbedSample], m: usize, config: &ExplainerConfig) -> Result<Vec<f64>> {
    let scales = feature_scales(samples, m);
    let total: f64 = samples.iter().map(|s| s.kernel_weight).sum();
    if !(total > 0.0) {
        return Err(Error::InvalidInput("kernel weights sum to zero".into()));
    }
    // sparse scaled rows: (sample weight, f_scores, rows of (col, value))
    let rows: Vec<(f64, &[f64], Vec<Vec<(usize, f64)>>)> = samples
        .iter()
        .map(|s| {
            let sparse = s
                .features
                .iter()
                .map(|r| r.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(c, v)| (c, v / scales[c])).collect())
                .collect();
            (s.kernel_weight / total, s.f_scores.as_slice(), sparse)
        })
        .collect();
    // same minimizer as sum(pi * L) + l1 |w|, stepped per unit kernel mass
    let lambda = config.l1_lambda / total;
    let mut w = vec![0.0; m];
    let mut grad = vec![0.0; m];
    let mut g = Vec::new();
    for _ in 0..config.epochs {
        grad.iter_mut().for_each(|v| *v = 0.0);
        for (pi, f_scores, sparse) in &rows {
            g.clear();
            g.extend(sparse.iter().map(|r| r.iter().map(|&(c, v)| w[c] * v).sum::<f64>()));
            let (_, dg) = config.loss.evaluate(&g, f_scores, config.temperature)?;
            for (r, d) in sparse.iter().zip(&dg) {
                let coeff = pi * d;
                if coeff != 0.0 {
                    for &(c, v) in r {
                        grad[c] += coeff * v;
                    }
                }
            }
        }
        for (wi, gi) in w.iter_mut().zip(&grad) {
            let sub = if *wi > 0.0 {
                lambda
            } else if *wi < 0.0 {
                -lambda
            } else {
                0.0
            };
            *wi -= config.learning_rate * (gi + sub);
        }
    }
    Ok(w.iter().zip(&scales).map(|(wi, s)| wi / s).collect())
}

/// Fits the surrogate on already generated, kernel-weighted samples.
pub fn fit_samples(
    instance_id: &str,
    samples: &[PerturbedSample],
    space: &FeatureSpace,
    config: &ExplainerConfig,
) -> Result<Explanation> {
    config.validate()?;
    let anchor = samples.first().ok_or_else(|| Error::InvalidInput("no samples".into()))?;
    if anchor.f_scores.len() == 1 {
        return Explanation::from_weights(instance_id, "rank-lime", space, Vec::new(), Vec::new(), 1.0);
    }
    let dense = fit_weights(samples, space.len(), config)?;
    // Select by effect size: a weight times its feature's spread. Raw
    // magnitudes would favour rare, low-variance features.
    let scales = feature_scales(samples, space.len());
    let effect: Vec<f64> = dense.iter().zip(&scales).map(|(w, s)| w * s).collect();
    let (ids, _) = sparsify(&effect, config.k);
    let weights: Vec<f64> = ids.iter().map(|&i| dense[i]).collect();
    let mut sparse = vec![0.0; space.len()];
    for (&i, &v) in ids.iter().zip(&weights) {
        sparse[i] = v;
    }
    let fidelity = score_tau(&anchor.f_scores, &explanation_scores(&sparse, &anchor.features))?;
    Explanation::from_weights(instance_id, "rank-lime", space, ids, weights, fidelity)
}

/// Explains the ranker's ordering of `subject` in `space`.
pub fn fit(subject: Subject<'_>, ranker: &dyn Ranker, space: &FeatureSpace, config: &ExplainerConfig) -> Result<Explanation> {
    config.validate()?;
    if subject.doc_count() == 1 {
        subject.original_scores(ranker)?;
        return Explanation::from_weights(subject.id(), "rank-lime", space, Vec::new(), Vec::new(), 1.0);
    }
    let mut samples = generate_perturbations(subject, space, ranker, &config.plan, config.seed)?;
    assign_kernel_weights(subject, &mut samples, config.sigma_for(subject.doc_count()), config.kernel_space)?;
    fit_samples(subject.id(), &samples, space, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::TabularInstance;
    use crate::rankers::{LinearTabularModel, RankerHandle};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cosine_rules() {
        assert_eq!(cosine_distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap().abs() < 1e-15, true);
        assert_eq!(cosine_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(cosine_distance(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(cosine_distance(&[0.0, 0.0], &[0.0, 3.0]).unwrap(), 1.0);
        assert!(cosine_distance(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn proximity_points() {
        let docs = vec![vec![1.0, 1.0]];
        assert_eq!(proximity(&[1.0], &docs, &[1.0], &docs, 1.0).unwrap(), 1.0);
        // one orthogonal document: delta = 1 = sigma
        let p = proximity(&[], &[vec![1.0, 0.0]], &[], &[vec![0.0, 1.0]], 1.0).unwrap();
        assert!((p - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn rare_word_mask_is_closer_than_dominant_words() {
        // doc 0 long with one rare word (last column); doc 1 dominated by word 0
        let original = vec![vec![5.0, 4.0, 3.0, 1.0], vec![6.0, 1.0, 0.0, 0.0]];
        let q = vec![1.0, 0.0, 0.0, 0.0];
        let rare = vec![vec![5.0, 4.0, 3.0, 0.0], original[1].clone()];
        let dominant = vec![vec![0.0, 4.0, 3.0, 1.0], vec![0.0, 1.0, 0.0, 0.0]];
        let q_dominant = vec![0.0; 4];
        let sigma = 0.75;
        let p_rare = proximity(&q, &original, &q, &rare, sigma).unwrap();
        let p_dom = proximity(&q, &original, &q_dominant, &dominant, sigma).unwrap();
        // direct evaluation
        let cd = |a: &[f64], b: &[f64]| {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let n = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n(a) == 0.0 || n(b) == 0.0 { 1.0 } else { 1.0 - dot / (n(a) * n(b)) }
        };
        let delta = cd(&original[0], &rare[0]);
        assert!((p_rare - (-(delta * delta) / (sigma * sigma)).exp()).abs() < 1e-12);
        assert!(p_rare > p_dom);
    }

    #[test]
    fn sparsify_rules() {
        assert_eq!(sparsify(&[0.1, -0.9, 0.5], 2), (vec![1, 2], vec![-0.9, 0.5]));
        assert_eq!(sparsify(&[0.0, 0.0], 3), (vec![], vec![]));
        assert_eq!(sparsify(&[0.5, -0.5, 0.5], 2).0, vec![0, 1]);
        let many: Vec<f64> = (1..=20).map(|i| i as f64 * 0.1).collect();
        assert_eq!(sparsify(&many, 8).0.len(), 8);
        assert_eq!(sparsify(&[0.0, 1.0], 2).0, vec![1]);
    }

    #[test]
    fn display_normalization() {
        assert_eq!(normalize_for_display(&[2.0, -2.0]).unwrap(), vec![0.5, -0.5]);
        assert_eq!(normalize_for_display(&[1.0]).unwrap(), vec![1.0]);
        assert!(matches!(normalize_for_display(&[0.0]), Err(Error::AllZeroWeights)));
    }

    fn random_tabular(rng: &mut ChaCha8Rng, n: usize, m: usize) -> TabularInstance {
        TabularInstance {
            id: "q".into(),
            doc_ids: (0..n).map(|i| format!("d{i}")).collect(),
            rows: (0..n).map(|_| (0..m).map(|_| rng.gen_range(0.0..1.0)).collect()).collect(),
        }
    }

    #[test]
    fn linear_ranker_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let weights = vec![2.0, -1.0, 0.0, 0.5, 0.0, 0.0];
        let ranker = RankerHandle::Linear(LinearTabularModel { weights: weights.clone(), bias: 0.0 });
        let space = FeatureSpace::tabular((0..6).map(|i| format!("f{i}")).collect());
        let tab = random_tabular(&mut rng, 10, 6);
        let config = ExplainerConfig { loss: LossKind::ListNet, ..ExplainerConfig::default() };
        let e = fit(Subject::Tabular(&tab), &ranker, &space, &config).unwrap();
        assert_eq!(e.training_fidelity, 1.0);
        assert!(e.feature_ids.contains(&0));
        assert!(e.feature_ids.len() <= 8);
        let s: f64 = e.display_weights.iter().map(|w| w.abs()).sum();
        assert!((s - 1.0).abs() < 1e-12);
        for (r, d) in e.raw_weights.iter().zip(&e.display_weights) {
            assert_eq!(r.signum(), d.signum());
        }
        for pair in e.raw_weights.windows(2) {
            assert!(pair[0].abs() >= pair[1].abs());
        }
    }

    #[test]
    fn single_document_is_trivial() {
        let tab = TabularInstance { id: "q".into(), doc_ids: vec!["a".into()], rows: vec![vec![1.0, 2.0]] };
        let ranker = RankerHandle::Linear(LinearTabularModel { weights: vec![1.0, 1.0], bias: 0.0 });
        let space = FeatureSpace::tabular(vec!["a".into(), "b".into()]);
        let e = fit(Subject::Tabular(&tab), &ranker, &space, &ExplainerConfig::default()).unwrap();
        assert!(e.is_empty());
        assert_eq!(e.training_fidelity, 1.0);
    }

    #[test]
    fn deterministic_and_kernel_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tab = random_tabular(&mut rng, 6, 4);
        let ranker = RankerHandle::Linear(LinearTabularModel { weights: vec![1.0, -2.0, 0.3, 0.0], bias: 0.0 });
        let space = FeatureSpace::tabular((0..4).map(|i| format!("f{i}")).collect());
        let config = ExplainerConfig { seed: 9, loss: LossKind::NeuralNdcg, ..ExplainerConfig::default() };
        let a = fit(Subject::Tabular(&tab), &ranker, &space, &config).unwrap();
        let b = fit(Subject::Tabular(&tab), &ranker, &space, &config).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());

        let mut samples = generate_perturbations(Subject::Tabular(&tab), &space, &ranker, &config.plan, 1).unwrap();
        assign_kernel_weights(Subject::Tabular(&tab), &mut samples, config.sigma_for(6), KernelSpace::Explanation).unwrap();
        assert_eq!(samples[0].kernel_weight, 1.0);
        assert!(samples.iter().all(|s| s.kernel_weight > 0.0 && s.kernel_weight <= 1.0));
    }

    #[test]
    fn sparsified_loss_within_penalty_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let tab = random_tabular(&mut rng, 8, 5);
        let ranker = RankerHandle::Linear(LinearTabularModel { weights: vec![1.0, 0.5, -0.5, 0.2, 0.0], bias: 0.0 });
        let space = FeatureSpace::tabular((0..5).map(|i| format!("f{i}")).collect());
        let config = ExplainerConfig { k: 3, ..ExplainerConfig::default() };
        let mut samples = generate_perturbations(Subject::Tabular(&tab), &space, &ranker, &config.plan, 2).unwrap();
        assign_kernel_weights(Subject::Tabular(&tab), &mut samples, config.sigma_for(8), KernelSpace::Explanation).unwrap();
        let unpenalized = fit_weights(&samples, 5, &ExplainerConfig { l1_lambda: 0.0, ..config.clone() }).unwrap();
        let penalized = fit_weights(&samples, 5, &config).unwrap();
        let (ids, w) = sparsify(&penalized, 5);
        let mut full = vec![0.0; 5];
        ids.iter().zip(&w).for_each(|(&i, &v)| full[i] = v);
        let l_sparse = weighted_loss(&samples, &full, config.loss, config.temperature).unwrap();
        let l_free = weighted_loss(&samples, &unpenalized, config.loss, config.temperature).unwrap();
        let l1: f64 = unpenalized.iter().map(|v| v.abs()).sum();
        assert!(l_sparse <= l_free + config.l1_lambda * l1 + 1e-3, "{l_sparse} vs {l_free} + {l1}");
    }

    #[test]
    fn json_round_trip() {
        let space = FeatureSpace::tabular(vec!["a".into(), "b".into()]);
        let e = Explanation::from_weights("q", "rank-lime", &space, vec![0, 1], vec![0.25, -0.75], 0.5).unwrap();
        assert_eq!(e.feature_ids, vec![1, 0]);
        let text = serde_json::to_string(&e).unwrap();
        assert!(text.contains("\"fidelity\":0.5"));
        let back: Explanation = serde_json::from_str(&text).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn scaling_weights_keeps_ranking() {
        let features = vec![vec![1.0, 0.0], vec![0.5, 2.0], vec![0.0, 1.0]];
        let w = [0.3, -0.7];
        let base = rank_from_scores(&explanation_scores(&w, &features)).unwrap();
        for c in [0.01, 1.0, 37.0] {
            let scaled: Vec<f64> = w.iter().map(|v| v * c).collect();
            assert_eq!(rank_from_scores(&explanation_scores(&scaled, &features)).unwrap().ordering, base.ordering);
        }
    }
}
