//! Brute-force reference computations for tests.
//!
//! Nothing here is on a training path. Each function recomputes a quantity
//! the fast code maintains incrementally or analytically, using the most
//! direct method available.

use rand::Rng;
use thiserror::Error;

use crate::policy::{CategoricalDistribution, PolicyError};
use crate::ris::{exp_smoothed_weight, PolicyProb, RisError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("matrix is singular at pivot {0}")]
    Singular(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("value {value} outside domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("need at least {0} samples")]
    TooFewSamples(usize),

    #[error(transparent)]
    Ris(#[from] RisError),

    #[error(transparent)]
    Policy(#[from] PolicyError),
}

/// Central differences `(f(x + εeᵢ) − f(x − εeᵢ)) / 2ε` per coordinate.
pub fn finite_difference_gradient<F>(mut f: F, params: &[f64], epsilon: f64) -> Result<Vec<f64>, OracleError>
where
    F: FnMut(&[f64]) -> f64,
{
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(OracleError::Domain {
            value: epsilon,
            domain: "epsilon > 0",
        });
    }
    let mut x = params.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + epsilon;
        let plus = f(&x);
        x[i] = orig - epsilon;
        let minus = f(&x);
        x[i] = orig;
        grad.push((plus - minus) / (2.0 * epsilon));
    }
    Ok(grad)
}

/// Row-major identity.
pub fn identity(dim: usize) -> Vec<f64> {
    let mut m = vec![0.0; dim * dim];
    for i in 0..dim {
        m[i * dim + i] = 1.0;
    }
    m
}

/// Inverse of a row-major square matrix by Gauss–Jordan elimination with
/// partial pivoting.
pub fn invert(matrix: &[f64], dim: usize) -> Result<Vec<f64>, OracleError> {
    if matrix.len() != dim * dim {
        return Err(OracleError::Dimension {
            expected: dim * dim,
            got: matrix.len(),
        });
    }
    let mut a = matrix.to_vec();
    let mut inv = identity(dim);
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    for col in 0..dim {
        let pivot = (col..dim)
            .max_by(|&i, &j| a[i * dim + col].abs().total_cmp(&a[j * dim + col].abs()))
            .expect("non-empty range");
        if a[pivot * dim + col].abs() <= scale * 1e-14 {
            return Err(OracleError::Singular(col));
        }
        if pivot != col {
            for k in 0..dim {
                a.swap(pivot * dim + k, col * dim + k);
                inv.swap(pivot * dim + k, col * dim + k);
            }
        }
        let p = a[col * dim + col];
        for k in 0..dim {
            a[col * dim + k] /= p;
            inv[col * dim + k] /= p;
        }
        for row in 0..dim {
            if row == col {
                continue;
            }
            let factor = a[row * dim + col];
            if factor == 0.0 {
                continue;
            }
            for k in 0..dim {
                a[row * dim + k] -= factor * a[col * dim + k];
                inv[row * dim + k] -= factor * inv[col * dim + k];
            }
        }
    }
    Ok(inv)
}

/// The decayed Fisher estimate `(1−α)ᵀ I + α Σₜ (1−α)^(T−1−t) ψₜψₜᵀ`.
pub fn accumulated_fisher(psis: &[Vec<f64>], alpha: f64, dim: usize) -> Result<Vec<f64>, OracleError> {
    let mut g = identity(dim);
    for psi in psis {
        if psi.len() != dim {
            return Err(OracleError::Dimension {
                expected: dim,
                got: psi.len(),
            });
        }
        for i in 0..dim {
            for j in 0..dim {
                g[i * dim + j] = (1.0 - alpha) * g[i * dim + j] + alpha * psi[i] * psi[j];
            }
        }
    }
    Ok(g)
}

/// Dense inverse of [`accumulated_fisher`].
pub fn direct_fisher_inverse(psis: &[Vec<f64>], alpha: f64, dim: usize) -> Result<Vec<f64>, OracleError> {
    invert(&accumulated_fisher(psis, alpha, dim)?, dim)
}

/// True when the symmetric part of `matrix` admits a Cholesky factorization.
pub fn is_positive_definite(matrix: &[f64], dim: usize) -> bool {
    let mut l = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let a = 0.5 * (matrix[i * dim + j] + matrix[j * dim + i]);
            let s: f64 = (0..j).map(|k| l[i * dim + k] * l[j * dim + k]).sum();
            if i == j {
                let d = a - s;
                if d.is_nan() || d <= 0.0 {
                    return false;
                }
                l[i * dim + i] = d.sqrt();
            } else {
                l[i * dim + j] = (a - s) / l[j * dim + j];
            }
        }
    }
    true
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorStats {
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub count: usize,
}

impl EstimatorStats {
    pub fn from_values(values: &[f64]) -> Result<Self, OracleError> {
        if values.len() < 2 {
            return Err(OracleError::TooFewSamples(2));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Ok(Self {
            mean,
            variance,
            count: values.len(),
        })
    }
}

/// Per-sample `weight(π(a), b(a)) · reward(a)` with `a ~ b`.
pub fn monte_carlo_weighted_values<R, W, F>(
    pi: &CategoricalDistribution,
    b: &CategoricalDistribution,
    mut reward: F,
    mut weight: W,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>, OracleError>
where
    R: Rng + ?Sized,
    W: FnMut(PolicyProb, PolicyProb) -> Result<f64, RisError>,
    F: FnMut(usize) -> f64,
{
    if pi.n_actions() != b.n_actions() {
        return Err(OracleError::Dimension {
            expected: b.n_actions(),
            got: pi.n_actions(),
        });
    }
    (0..n)
        .map(|_| {
            let a = b.sample(rng);
            let w = weight(PolicyProb::new(pi.prob(a)?)?, PolicyProb::new(b.prob(a)?)?)?;
            Ok(w * reward(a))
        })
        .collect()
}

/// Monte-Carlo statistics of the exp-smoothed weighted reward under `b`.
pub fn monte_carlo_ris_stats<R, F>(
    pi: &CategoricalDistribution,
    b: &CategoricalDistribution,
    reward: F,
    beta: f64,
    n: usize,
    rng: &mut R,
) -> Result<EstimatorStats, OracleError>
where
    R: Rng + ?Sized,
    F: FnMut(usize) -> f64,
{
    if n < 2 {
        return Err(OracleError::TooFewSamples(2));
    }
    if b.probs().iter().any(|&p| p <= 0.0) {
        return Err(OracleError::Domain {
            value: 0.0,
            domain: "behavior with full support",
        });
    }
    let values = monte_carlo_weighted_values(
        pi,
        b,
        reward,
        |p, q| Ok(exp_smoothed_weight(p, q, beta)),
        n,
        rng,
    )?;
    EstimatorStats::from_values(&values)
}

/// Both sides of `1/(1−γ²) − 1/(1−γ)² = −2γ / ((1−γ²)(1−γ))`.
pub fn variance_identity_check(gamma: f64) -> Result<(f64, f64), OracleError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(OracleError::Domain {
            value: gamma,
            domain: "0 < gamma < 1",
        });
    }
    let g2 = 1.0 - gamma * gamma;
    let g1 = 1.0 - gamma;
    let lhs = 1.0 / g2 - 1.0 / (g1 * g1);
    let rhs = -2.0 * gamma / (g2 * g1);
    Ok((lhs, rhs))
}
