//! Differentiable listwise losses between predicted scores and a target.
//!
//! Every loss returns `(value, gradient w.r.t. pred)`.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::min_max_normalize;

pub const DEFAULT_TEMPERATURE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    ListNet,
    RankNet,
    ApproxNdcg,
    NeuralNdcg,
}

impl LossKind {
    pub const ALL: [LossKind; 4] = [LossKind::ListNet, LossKind::RankNet, LossKind::ApproxNdcg, LossKind::NeuralNdcg];

    pub fn as_str(self) -> &'static str {
        match self {
            LossKind::ListNet => "listnet",
            LossKind::RankNet => "ranknet",
            LossKind::ApproxNdcg => "approx-ndcg",
            LossKind::NeuralNdcg => "neural-ndcg",
        }
    }

    /// Loss of `pred` against the black-box scores of one perturbed sample.
    ///
    /// ListNet and RankNet compare against the raw scores; the NDCG proxies
    /// use min-max normalized scores as gains.
    pub fn evaluate(self, pred: &[f64], f_scores: &[f64], temperature: f64) -> Result<(f64, Vec<f64>)> {
        match self {
            LossKind::ListNet => listnet_loss(pred, f_scores),
            LossKind::RankNet => ranknet_loss(pred, f_scores),
            LossKind::ApproxNdcg => {
                check_len(pred, f_scores)?;
                approx_ndcg_loss(pred, &min_max_normalize(f_scores), temperature)
            }
            LossKind::NeuralNdcg => {
                check_len(pred, f_scores)?;
                neural_ndcg_loss(pred, &min_max_normalize(f_scores), temperature)
            }
        }
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LossKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown loss {s:?}")))
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

fn check_len(pred: &[f64], target: &[f64]) -> Result<()> {
    if pred.len() != target.len() {
        return Err(Error::DimensionMismatch { expected: pred.len(), actual: target.len() });
    }
    if pred.is_empty() {
        return Err(Error::InvalidInput("empty score list".into()));
    }
    Ok(())
}

pub(crate) fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

fn log_softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + x.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    x.iter().map(|v| v - lse).collect()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Top-one cross entropy: `-sum softmax(target) * ln softmax(pred)`.
pub fn listnet_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_len(pred, target)?;
    let pt = softmax(target);
    let lp = log_softmax(pred);
    let loss = -pt.iter().zip(&lp).map(|(a, b)| a * b).sum::<f64>();
    let grad = softmax(pred).iter().zip(&pt).map(|(p, t)| p - t).collect();
    Ok((loss, grad))
}

/// Pair-averaged logistic loss over every pair the target orders strictly.
pub fn ranknet_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_len(pred, target)?;
    let n = pred.len();
    let mut loss = 0.0;
    let mut grad = vec![0.0; n];
    let mut pairs = 0usize;
    for i in 0..n {
        for j in 0..n {
            if target[i] > target[j] {
                let margin = pred[i] - pred[j];
                loss += softplus(-margin);
                let g = sigmoid(-margin);
                grad[i] -= g;
                grad[j] += g;
                pairs += 1;
            }
        }
    }
    if pairs == 0 {
        return Ok((0.0, grad));
    }
    let p = pairs as f64;
    grad.iter_mut().for_each(|g| *g /= p);
    Ok((loss / p, grad))
}

/// DCG of gains placed in descending order, over all positions.
pub(crate) fn ideal_dcg(gains: &[f64]) -> f64 {
    let mut sorted = gains.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted.iter().enumerate().map(|(i, g)| g / ((i + 2) as f64).log2()).sum()
}

/// `1 - ApproxNDCG` with smooth positions
/// `rank_i = 1 + sum_{j != i} sigmoid((pred_j - pred_i) / T)`.
pub fn approx_ndcg_loss(pred: &[f64], gains: &[f64], temperature: f64) -> Result<(f64, Vec<f64>)> {
    check_len(pred, gains)?;
    check_temperature(temperature)?;
    let n = pred.len();
    let idcg = ideal_dcg(gains);
    if idcg <= 0.0 {
        return Ok((0.0, vec![0.0; n]));
    }
    let mut ranks = vec![1.0; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                ranks[i] += sigmoid((pred[j] - pred[i]) / temperature);
            }
        }
    }
    let dcg: f64 = (0..n).map(|i| gains[i] / (1.0 + ranks[i]).log2()).sum();
    // dLoss/drank_i
    let d_rank: Vec<f64> = (0..n)
        .map(|i| {
            let l = (1.0 + ranks[i]).log2();
            gains[i] / ((1.0 + ranks[i]) * LN_2 * l * l) / idcg
        })
        .collect();
    let mut grad = vec![0.0; n];
    for i in 0..n {
        if d_rank[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            if i == j {
                continue;
            }
            let s = sigmoid((pred[j] - pred[i]) / temperature);
            let ds = s * (1.0 - s) / temperature;
            grad[j] += d_rank[i] * ds;
            grad[i] -= d_rank[i] * ds;
        }
    }
    Ok((1.0 - dcg / idcg, grad))
}

fn check_temperature(t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidInput(format!("temperature must be finite and positive, got {t}")));
    }
    Ok(())
}

/// Relaxed sort matrix: row `i` (1-based) is
/// `softmax(((n + 1 - 2i) * pred - A 1) / tau)` with `A_jk = |pred_j - pred_k|`.
pub fn soft_permutation(pred: &[f64], temperature: f64) -> Vec<Vec<f64>> {
    let n = pred.len();
    let abs_sums: Vec<f64> = pred.iter().map(|&a| pred.iter().map(|&b| (a - b).abs()).sum()).collect();
    (1..=n)
        .map(|i| {
            let scale = (n + 1) as f64 - 2.0 * i as f64;
            let logits: Vec<f64> =
                pred.iter().zip(&abs_sums).map(|(&p, &b)| (scale * p - b) / temperature).collect();
            softmax(&logits)
        })
        .collect()
}

/// `1 - NeuralNDCG`: DCG of the gains routed through [`soft_permutation`].
pub fn neural_ndcg_loss(pred: &[f64], gains: &[f64], temperature: f64) -> Result<(f64, Vec<f64>)> {
    check_len(pred, gains)?;
    check_temperature(temperature)?;
    let n = pred.len();
    let idcg = ideal_dcg(gains);
    if idcg <= 0.0 {
        return Ok((0.0, vec![0.0; n]));
    }
    let perm = soft_permutation(pred, temperature);
    let smoothed: Vec<f64> =
        perm.iter().map(|row| row.iter().zip(gains).map(|(p, g)| p * g).sum()).collect();
    let discounts: Vec<f64> = (0..n).map(|i| 1.0 / ((i + 2) as f64).log2()).collect();
    let dcg: f64 = smoothed.iter().zip(&discounts).map(|(g, d)| g * d).sum();

    // e[i][j] = dLoss/dlogit_ij
    let mut col_sums = vec![0.0; n];
    let mut grad = vec![0.0; n];
    for i in 0..n {
        let a = -discounts[i] / idcg;
        let scale = (n + 1) as f64 - 2.0 * (i + 1) as f64;
        for j in 0..n {
            let e = a * perm[i][j] * (gains[j] - smoothed[i]);
            col_sums[j] += e;
            grad[j] += e * scale;
        }
    }
    for m in 0..n {
        let sign_sum: f64 = pred.iter().map(|&k| sign(pred[m] - k)).sum();
        let cross: f64 = (0..n).map(|j| col_sums[j] * sign(pred[j] - pred[m])).sum();
        grad[m] += cross - col_sums[m] * sign_sum;
    }
    grad.iter_mut().for_each(|g| *g /= temperature);
    Ok((1.0 - dcg / idcg, grad))
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
