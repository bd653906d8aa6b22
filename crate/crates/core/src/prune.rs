//! Pruning the explanation feature set: a linearly independent basis of the
//! feature columns, or the best subset found by exhaustive re-fitting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::{fit, ExplainerConfig};
use crate::features::{FeatureMatrix, FeatureSpace};
use crate::perturb::Subject;
use crate::rankers::Ranker;

/// Relative rank tolerance of [`independent_feature_set`].
pub const RANK_TOLERANCE: f64 = 1e-8;
/// Largest space accepted by [`exhaustive_feature_selection`].
pub const EXHAUSTIVE_LIMIT: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PruneMode {
    Independent,
    Exhaustive,
}

/// Columns forming a basis of the column space, picked greedily in
/// ascending order: a column is kept when its residual after projecting out
/// the kept columns exceeds `RANK_TOLERANCE` times the largest column norm.
pub fn independent_feature_set(matrix: &[Vec<f64>]) -> Vec<usize> {
    let m = matrix.first().map_or(0, Vec::len);
    let column = |c: usize| -> Vec<f64> { matrix.iter().map(|r| r[c]).collect() };
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let max_norm = (0..m).map(|c| norm(&column(c))).fold(0.0, f64::max);
    if max_norm == 0.0 {
        return Vec::new();
    }
    let tol = RANK_TOLERANCE * max_norm;
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    for c in 0..m {
        let mut v = column(c);
        // two passes of modified Gram-Schmidt for stability
        for _ in 0..2 {
            for q in &basis {
                let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= dot * b);
            }
        }
        let r = norm(&v);
        if r > tol {
            basis.push(v.iter().map(|x| x / r).collect());
            kept.push(c);
        }
    }
    kept
}

/// Basis over the stacked rows of several instances.
pub fn corpus_independent_set(matrices: &[FeatureMatrix]) -> Vec<usize> {
    let stacked: Vec<Vec<f64>> = matrices.iter().flatten().cloned().collect();
    independent_feature_set(&stacked)
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

/// Every non-empty subset of `0..m` with at most `k` elements.
fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for size in 1..=k.min(m) {
        let mut c: Vec<usize> = (0..size).collect();
        loop {
            out.push(c.clone());
            if !next_combination(&mut c, m) {
                break;
            }
        }
    }
    out
}

/// Training fidelity of an explanation fitted on `ids` only.
pub fn restricted_fidelity(
    subject: Subject<'_>,
    ranker: &dyn Ranker,
    space: &FeatureSpace,
    ids: &[usize],
    config: &ExplainerConfig,
) -> Result<f64> {
    Ok(fit(subject, ranker, &space.restrict(ids), config)?.training_fidelity)
}

/// The subset of at most `k` features whose re-fitted explanation has the
/// highest training fidelity; ties go to the smaller subset, then the
/// lexicographically smaller one. Subsets are fitted on `threads` worker threads.
pub fn exhaustive_feature_selection(
    subject: Subject<'_>,
    ranker: &dyn Ranker,
    space: &FeatureSpace,
    k: usize,
    config: &ExplainerConfig,
) -> Result<(Vec<usize>, f64)> {
    let m = space.len();
    if m > EXHAUSTIVE_LIMIT {
        return Err(Error::EnumerationBound { limit: EXHAUSTIVE_LIMIT, actual: m });
    }
    let candidates = subsets(m, k);
    if candidates.is_empty() {
        return Ok((Vec::new(), 1.0));
    }
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(candidates.len());
    let chunk = candidates.len().div_ceil(threads);
    let scores: Vec<Result<f64>> = std::thread::scope(|scope| {
        let handles: Vec<_> = candidates
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter().map(|ids| restricted_fidelity(subject, ranker, space, ids, config)).collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("subset worker panicked")).collect()
    });
    let mut best: Option<(f64, &Vec<usize>)> = None;
    for (ids, score) in candidates.iter().zip(scores) {
        let score = score?;
        let better = match best {
            None => true,
            Some((b, ref_ids)) => score > b || (score == b && (ids.len(), ids) < (ref_ids.len(), ref_ids)),
        };
        if better {
            best = Some((score, ids));
        }
    }
    let (score, ids) = best.expect("at least one subset");
    Ok((ids.clone(), score))
}

/// Before and after fidelity of one pruning run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneOutcome {
    pub instance_id: String,
    pub mode: PruneMode,
    pub feature_ids: Vec<usize>,
    pub features: Vec<String>,
    pub fidelity_before: f64,
    pub fidelity_after: f64,
}

/// Prunes the space of one instance and re-fits on the retained features.
pub fn prune_instance(
    subject: Subject<'_>,
    ranker: &dyn Ranker,
    space: &FeatureSpace,
    mode: PruneMode,
    k: usize,
    config: &ExplainerConfig,
) -> Result<PruneOutcome> {
    let fidelity_before = fit(subject, ranker, space, config)?.training_fidelity;
    let (ids, fidelity_after) = match mode {
        PruneMode::Independent => {
            let ids = independent_feature_set(&subject.feature_matrix(space)?);
            let after = if ids.is_empty() { fidelity_before } else { restricted_fidelity(subject, ranker, space, &ids, config)? };
            (ids, after)
        }
        PruneMode::Exhaustive => exhaustive_feature_selection(subject, ranker, space, k, config)?,
    };
    Ok(PruneOutcome {
        instance_id: subject.id().to_string(),
        mode,
        features: ids.iter().map(|&i| space.name(i).to_string()).collect(),
        feature_ids: ids,
        fidelity_before,
        fidelity_after,
    })
}
