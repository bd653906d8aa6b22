//! Tabular rankers: ridge linear regression and a pairwise-boosted stump
//! ensemble.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ridge penalty applied to the weights (never the bias).
pub const RIDGE_LAMBDA: f64 = 1e-3;
/// Default number of boosting rounds.
pub const DEFAULT_ROUNDS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearTabularModel {
    pub weights: Vec<f64>,
    #[serde(default)]
    pub bias: f64,
}

impl LinearTabularModel {
    pub fn score(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter()
            .map(|row| {
                check_dim(self.weights.len(), row.len())?;
                Ok(dot(&self.weights, row) + self.bias)
            })
            .collect()
    }
}

/// One decision stump: `weight * (x[feature] <= threshold ? left : right)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub left: f64,
    pub right: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StumpEnsemble {
    pub feature_count: usize,
    pub stumps: Vec<Stump>,
}

impl StumpEnsemble {
    pub fn score(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter()
            .map(|row| {
                if !self.stumps.is_empty() || self.feature_count > 0 {
                    check_dim(self.feature_count, row.len())?;
                }
                Ok(self
                    .stumps
                    .iter()
                    .map(|s| s.weight * if row[s.feature] <= s.threshold { s.left } else { s.right })
                    .sum())
            })
            .collect()
    }
}

fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fits `w, b` minimizing `sum (w.x + b - y)^2 + RIDGE_LAMBDA * |w|^2`.
pub fn train_linear_ranker(rows: &[(Vec<f64>, f64)]) -> Result<LinearTabularModel> {
    let Some((first, _)) = rows.first() else {
        return Err(Error::InvalidInput("no training rows".into()));
    };
    let dim = first.len();
    for (x, _) in rows {
        check_dim(dim, x.len())?;
    }
    let n = rows.len() as f64;
    let mut mean_x = vec![0.0; dim];
    let mut mean_y = 0.0;
    for (x, y) in rows {
        for (m, v) in mean_x.iter_mut().zip(x) {
            *m += v / n;
        }
        mean_y += y / n;
    }
    let centered = DMatrix::from_fn(rows.len(), dim, |r, c| rows[r].0[c] - mean_x[c]);
    let target = DVector::from_fn(rows.len(), |r, _| rows[r].1 - mean_y);
    let gram = centered.transpose() * &centered + DMatrix::identity(dim, dim) * RIDGE_LAMBDA;
    let rhs = centered.transpose() * target;
    let weights = gram
        .cholesky()
        .ok_or(Error::Factorization)?
        .solve(&rhs)
        .iter()
        .copied()
        .collect::<Vec<_>>();
    let bias = mean_y - dot(&weights, &mean_x);
    Ok(LinearTabularModel { weights, bias })
}

/// A query group of `(features, relevance)` rows.
pub type QueryGroup = Vec<(Vec<f64>, f64)>;

// Pair weights are normalized to sum to one, so a fixed smoothing term keeps
// the stage weight invariant to duplicating the training data.
const ALPHA_SMOOTHING: f64 = 1e-6;

/// Exponential-loss pairwise boosting over decision stumps.
///
/// Each round picks the `(feature, threshold, orientation)` stump that
/// minimizes the normalizer `W0 + 2 sqrt(W+ W-)` over the current pair
/// distribution, where `W+`/`W-`/`W0` are the weights of pairs the stump
/// orders correctly, incorrectly, or ties.
pub fn train_stump_ensemble(groups: &[QueryGroup], rounds: usize) -> Result<StumpEnsemble> {
    let dim = groups
        .iter()
        .flat_map(|g| g.first())
        .map(|(x, _)| x.len())
        .next()
        .ok_or(Error::NoValidPair)?;
    for g in groups {
        for (x, _) in g {
            check_dim(dim, x.len())?;
        }
    }
    // (better, worse) row references
    let rows: Vec<&Vec<f64>> = groups.iter().flat_map(|g| g.iter().map(|(x, _)| x)).collect();
    let mut pairs = Vec::new();
    let mut offset = 0;
    for g in groups {
        for (i, (_, ri)) in g.iter().enumerate() {
            for (j, (_, rj)) in g.iter().enumerate() {
                if ri > rj {
                    pairs.push((offset + i, offset + j));
                }
            }
        }
        offset += g.len();
    }
    if pairs.is_empty() {
        return Err(Error::NoValidPair);
    }

    let thresholds: Vec<Vec<f64>> = (0..dim)
        .map(|f| {
            let mut vals: Vec<f64> = rows.iter().map(|r| r[f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            vals.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
        })
        .collect();

    let mut dist = vec![1.0 / pairs.len() as f64; pairs.len()];
    let mut ensemble = StumpEnsemble { feature_count: dim, stumps: Vec::new() };
    for _ in 0..rounds {
        let mut best: Option<(f64, usize, f64, f64, f64)> = None; // (z, f, theta, w_plus, w_minus)
        for (f, ths) in thresholds.iter().enumerate() {
            for &theta in ths {
                // orientation: left = 1, right = 0
                let (mut w_plus, mut w_minus) = (0.0, 0.0);
                for (&(hi, lo), &w) in pairs.iter().zip(&dist) {
                    let a = rows[hi][f] <= theta;
                    let b = rows[lo][f] <= theta;
                    match (a, b) {
                        (true, false) => w_plus += w,
                        (false, true) => w_minus += w,
                        _ => {}
                    }
                }
                let w_zero = (1.0 - w_plus - w_minus).max(0.0);
                let z = w_zero + 2.0 * (w_plus * w_minus).sqrt();
                if best.map_or(true, |(bz, ..)| z < bz - 1e-15) {
                    best = Some((z, f, theta, w_plus, w_minus));
                }
            }
        }
        let Some((_, feature, threshold, w_plus, w_minus)) = best else {
            break;
        };
        // flip orientation so the stump agrees with the pairs
        let (left, right, good, bad) = if w_plus >= w_minus {
            (1.0, 0.0, w_plus, w_minus)
        } else {
            (0.0, 1.0, w_minus, w_plus)
        };
        let alpha = 0.5 * ((good + ALPHA_SMOOTHING) / (bad + ALPHA_SMOOTHING)).ln();
        let stump = Stump { feature, threshold, left, right, weight: alpha };
        let h = |r: &Vec<f64>| if r[feature] <= threshold { left } else { right };
        let mut total = 0.0;
        for (&(hi, lo), w) in pairs.iter().zip(dist.iter_mut()) {
            *w *= (alpha * (h(rows[lo]) - h(rows[hi]))).exp();
            total += *w;
        }
        for w in &mut dist {
            *w /= total;
        }
        ensemble.stumps.push(stump);
    }
    Ok(ensemble)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_scores() {
        let m = LinearTabularModel { weights: vec![1.0, 0.0], bias: 0.0 };
        assert_eq!(m.score(&[vec![3.0, 9.0], vec![5.0, 0.0]]).unwrap(), vec![3.0, 5.0]);
        assert!(matches!(m.score(&[vec![1.0]]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn stump_scores() {
        let e = StumpEnsemble {
            feature_count: 1,
            stumps: vec![Stump { feature: 0, threshold: 1.0, left: -1.0, right: 1.0, weight: 2.0 }],
        };
        assert_eq!(e.score(&[vec![0.0], vec![2.0]]).unwrap(), vec![-2.0, 2.0]);
        let empty = StumpEnsemble { feature_count: 1, stumps: vec![] };
        assert_eq!(empty.score(&[vec![4.0], vec![1.0]]).unwrap(), vec![0.0, 0.0]);
        assert!(e.score(&[vec![1.0, 2.0]]).is_err());
    }

    // Closed form for centered 2-d ridge, solved independently by Cramer's rule.
    fn ridge_oracle(rows: &[(Vec<f64>, f64)]) -> (f64, f64) {
        let n = rows.len() as f64;
        let mx: Vec<f64> = (0..2).map(|c| rows.iter().map(|r| r.0[c]).sum::<f64>() / n).collect();
        let my = rows.iter().map(|r| r.1).sum::<f64>() / n;
        let (mut a, mut b, mut d, mut r0, mut r1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (x, y) in rows {
            let (u, v, t) = (x[0] - mx[0], x[1] - mx[1], y - my);
            a += u * u;
            b += u * v;
            d += v * v;
            r0 += u * t;
            r1 += v * t;
        }
        a += RIDGE_LAMBDA;
        d += RIDGE_LAMBDA;
        let det = a * d - b * b;
        ((r0 * d - b * r1) / det, (a * r1 - b * r0) / det)
    }

    #[test]
    fn ridge_recovers_noise_free_weights() {
        let rows: Vec<(Vec<f64>, f64)> = (0..12)
            .map(|i| {
                let x = vec![(i as f64 * 0.7).sin() * 3.0, (i as f64 * 1.3).cos() * 2.0];
                let y = 2.0 * x[0] - x[1];
                (x, y)
            })
            .collect();
        let m = train_linear_ranker(&rows).unwrap();
        assert!((m.weights[0] - 2.0).abs() < 1e-3);
        assert!((m.weights[1] + 1.0).abs() < 1e-3);
        let (w0, w1) = ridge_oracle(&rows);
        assert!((m.weights[0] - w0).abs() < 1e-10);
        assert!((m.weights[1] - w1).abs() < 1e-10);
    }

    #[test]
    fn ridge_single_row_and_zero_target() {
        let single = vec![(vec![1.0, 2.0], 3.0)];
        let m = train_linear_ranker(&single).unwrap();
        // centered data is zero, so weights vanish and the bias carries the target
        assert_eq!(m.weights, vec![0.0, 0.0]);
        assert!((m.score(&[vec![1.0, 2.0]]).unwrap()[0] - 3.0).abs() < 1e-12);

        let zeros: Vec<_> = (0..5).map(|i| (vec![i as f64, (i * i) as f64], 0.0)).collect();
        let m = train_linear_ranker(&zeros).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-9));
    }

    #[test]
    fn ridge_rejects_ragged_rows() {
        let rows = vec![(vec![1.0, 2.0], 1.0), (vec![1.0], 0.0)];
        assert!(matches!(train_linear_ranker(&rows), Err(Error::DimensionMismatch { .. })));
        assert!(train_linear_ranker(&[]).is_err());
    }

    fn pairwise_accuracy(model: &StumpEnsemble, group: &QueryGroup) -> f64 {
        let rows: Vec<Vec<f64>> = group.iter().map(|(x, _)| x.clone()).collect();
        let s = model.score(&rows).unwrap();
        let (mut ok, mut total) = (0, 0);
        for i in 0..group.len() {
            for j in 0..group.len() {
                if group[i].1 > group[j].1 {
                    total += 1;
                    if s[i] > s[j] {
                        ok += 1;
                    }
                }
            }
        }
        ok as f64 / total as f64
    }

    #[test]
    fn separable_after_one_round() {
        let group: QueryGroup = vec![
            (vec![0.9, 0.1], 1.0),
            (vec![0.8, 0.7], 1.0),
            (vec![0.2, 0.5], 0.0),
            (vec![0.1, 0.9], 0.0),
        ];
        // brute force: some single stump separates every pair
        let separating = (0..2).any(|f| {
            let mut vals: Vec<f64> = group.iter().map(|r| r.0[f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.windows(2).any(|w| {
                let t = 0.5 * (w[0] + w[1]);
                let rel: Vec<bool> = group.iter().map(|r| r.0[f] > t).collect();
                group.iter().zip(&rel).all(|(r, &above)| above == (r.1 > 0.5))
            })
        });
        assert!(separating);
        let m = train_stump_ensemble(&[group.clone()], 1).unwrap();
        assert_eq!(m.stumps.len(), 1);
        assert_eq!(pairwise_accuracy(&m, &group), 1.0);
    }

    #[test]
    fn zero_rounds_scores_zero() {
        let group: QueryGroup = vec![(vec![1.0], 1.0), (vec![0.0], 0.0)];
        let m = train_stump_ensemble(&[group], 0).unwrap();
        assert!(m.stumps.is_empty());
        assert_eq!(m.score(&[vec![1.0], vec![5.0]]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn duplicated_data_same_model() {
        let g1: QueryGroup = vec![
            (vec![0.3, 1.0, 0.2], 2.0),
            (vec![0.5, 0.1, 0.9], 1.0),
            (vec![0.1, 0.4, 0.4], 0.0),
            (vec![0.7, 0.3, 0.1], 1.0),
        ];
        let g2: QueryGroup = vec![(vec![0.2, 0.6, 0.8], 1.0), (vec![0.9, 0.2, 0.3], 0.0)];
        let a = train_stump_ensemble(&[g1.clone(), g2.clone()], 8).unwrap();
        let b = train_stump_ensemble(&[g1.clone(), g2.clone(), g1, g2], 8).unwrap();
        assert_eq!(a.stumps.len(), b.stumps.len());
        for (x, y) in a.stumps.iter().zip(&b.stumps) {
            assert_eq!((x.feature, x.threshold, x.left, x.right), (y.feature, y.threshold, y.left, y.right));
            assert!((x.weight - y.weight).abs() < 1e-9 * x.weight.abs().max(1.0));
        }
    }

    #[test]
    fn no_pairs_is_error() {
        let g: QueryGroup = vec![(vec![1.0], 1.0), (vec![0.0], 1.0)];
        assert!(matches!(train_stump_ensemble(&[g], 3), Err(Error::NoValidPair)));
    }
}
