//! Feature covariance estimation and correlated Gaussian sampling.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Diagonal jitter added before factorizing a covariance matrix.
pub const PSD_JITTER: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceEstimate {
    pub sigma: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub sample_count: usize,
    /// Set when fewer than two samples were available.
    pub degenerate: bool,
}

impl CovarianceEstimate {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Unbiased sample covariance (divisor `n - 1`) of the rows of `samples`.
pub fn estimate_covariance(samples: &[Vec<f64>]) -> Result<CovarianceEstimate> {
    let n = samples.len();
    let dim = samples.first().map_or(0, Vec::len);
    if dim == 0 {
        return Err(Error::InvalidInput("covariance of zero features".into()));
    }
    if samples.iter().any(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, actual: samples.iter().map(Vec::len).find(|&l| l != dim).unwrap_or(0) });
    }
    let mean: Vec<f64> = (0..dim).map(|c| samples.iter().map(|r| r[c]).sum::<f64>() / n as f64).collect();
    let mut sigma = vec![vec![0.0; dim]; dim];
    if n < 2 {
        log::warn!("covariance estimated from a single sample; using the zero matrix");
        return Ok(CovarianceEstimate { sigma, mean, sample_count: n, degenerate: true });
    }
    for row in samples {
        for i in 0..dim {
            let di = row[i] - mean[i];
            for j in i..dim {
                sigma[i][j] += di * (row[j] - mean[j]);
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..dim {
        for j in i..dim {
            sigma[i][j] /= denom;
            sigma[j][i] = sigma[i][j];
        }
    }
    Ok(CovarianceEstimate { sigma, mean, sample_count: n, degenerate: false })
}

/// Draws `count` zero-mean vectors with covariance `cov.sigma`.
///
/// Dimensions with zero variance are held at exactly zero; the remaining
/// block is factorized as `L L^T` after adding [`PSD_JITTER`] to its diagonal.
pub fn sample_correlated(cov: &CovarianceEstimate, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let dim = cov.dim();
    let active: Vec<usize> = (0..dim).filter(|&i| cov.sigma[i][i] > 0.0).collect();
    if active.is_empty() {
        return Ok(vec![vec![0.0; dim]; count]);
    }
    let k = active.len();
    let block = DMatrix::from_fn(k, k, |r, c| {
        cov.sigma[active[r]][active[c]] + if r == c { PSD_JITTER } else { 0.0 }
    });
    let lower = block.cholesky().ok_or(Error::Factorization)?.unpack();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut z = vec![0.0; k];
    for _ in 0..count {
        for v in z.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let mut delta = vec![0.0; dim];
        for (r, &dst) in active.iter().enumerate() {
            delta[dst] = (0..=r).map(|c| lower[(r, c)] * z[c]).sum();
        }
        out.push(delta);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_rows_zero_covariance() {
        let c = estimate_covariance(&[vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(c.sigma, vec![vec![0.0; 2]; 2]);
        assert!(!c.degenerate);
    }

    #[test]
    fn hand_computed_covariance() {
        // mean (0.5, 1); deviations (-0.5,-1), (0.5,1); divisor 1
        let c = estimate_covariance(&[vec![0.0, 0.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(c.sigma, vec![vec![0.5, 1.0], vec![1.0, 2.0]]);
    }

    #[test]
    fn row_order_irrelevant() {
        let rows = vec![vec![0.3, 1.0, -2.0], vec![1.5, 0.2, 0.0], vec![-0.7, 0.9, 4.0], vec![2.0, 2.0, 1.0]];
        let mut rev = rows.clone();
        rev.reverse();
        let a = estimate_covariance(&rows).unwrap();
        let b = estimate_covariance(&rev).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((a.sigma[i][j] - b.sigma[i][j]).abs() < 1e-12);
                assert!((a.sigma[i][j] - a.sigma[j][i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn single_sample_and_empty_dim() {
        let c = estimate_covariance(&[vec![1.0, 2.0]]).unwrap();
        assert!(c.degenerate);
        assert_eq!(c.sigma, vec![vec![0.0; 2]; 2]);
        assert!(estimate_covariance(&[vec![]]).is_err());
        assert!(estimate_covariance(&[]).is_err());
    }

    #[test]
    fn zero_sigma_draws_zero() {
        let c = estimate_covariance(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let d = sample_correlated(&c, 10, 3).unwrap();
        assert!(d.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_covariance_statistics() {
        let cov = CovarianceEstimate {
            sigma: vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            mean: vec![0.0; 3],
            sample_count: 0,
            degenerate: false,
        };
        let draws = sample_correlated(&cov, 50_000, 42).unwrap();
        let emp = estimate_covariance(&draws).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((emp.sigma[i][j] - expected).abs() < 0.05, "{i},{j}: {}", emp.sigma[i][j]);
            }
        }
    }

    #[test]
    fn same_seed_same_draws() {
        let cov = estimate_covariance(&[vec![0.0, 1.0], vec![2.0, 0.5], vec![1.0, 3.0]]).unwrap();
        assert_eq!(sample_correlated(&cov, 20, 9).unwrap(), sample_correlated(&cov, 20, 9).unwrap());
    }

    #[test]
    fn perfectly_correlated_features_stay_correlated() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| {
            let x = (i as f64 * 0.37).sin();
            vec![x, 2.0 * x, (i as f64).cos()]
        }).collect();
        let cov = estimate_covariance(&rows).unwrap();
        let draws = sample_correlated(&cov, 50_000, 1).unwrap();
        let emp = estimate_covariance(&draws).unwrap();
        let corr = emp.sigma[0][1] / (emp.sigma[0][0] * emp.sigma[1][1]).sqrt();
        assert!(corr >= 0.95, "corr {corr}");
    }
}
