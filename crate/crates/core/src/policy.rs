//! Categorical policies over a discrete action set.

use rand::Rng;
use thiserror::Error;

use crate::nn::softmax;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("action {action} has zero probability")]
    ZeroProbability { action: usize },

    #[error("action {action} out of range for {n_actions} actions")]
    ActionOutOfRange { action: usize, n_actions: usize },

    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalDistribution {
    probs: Vec<f64>,
}

impl CategoricalDistribution {
    /// Softmax of `logits`.
    pub fn from_logits(logits: &[f64]) -> Self {
        Self {
            probs: softmax(logits),
        }
    }

    /// Wraps an already normalized probability vector.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self, PolicyError> {
        if probs.is_empty() {
            return Err(PolicyError::InvalidDistribution("no actions".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(PolicyError::InvalidDistribution(format!("{probs:?}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(PolicyError::InvalidDistribution(format!(
                "probabilities sum to {sum}"
            )));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n_actions(&self) -> usize {
        self.probs.len()
    }

    pub fn prob(&self, action: usize) -> Result<f64, PolicyError> {
        self.probs
            .get(action)
            .copied()
            .ok_or(PolicyError::ActionOutOfRange {
                action,
                n_actions: self.probs.len(),
            })
    }

    /// Inverse-CDF sampling with a single uniform draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.action_at(u)
    }

    /// Action whose CDF bucket contains `u ∈ [0, 1)`.
    pub fn action_at(&self, u: f64) -> usize {
        let mut cumulative = 0.0;
        for (a, &p) in self.probs.iter().enumerate() {
            cumulative += p;
            if u < cumulative {
                return a;
            }
        }
        // Rounding left the total just below u: fall back to the last action
        // with positive mass.
        self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }

    pub fn log_prob(&self, action: usize) -> Result<f64, PolicyError> {
        let p = self.prob(action)?;
        if p <= 0.0 {
            return Err(PolicyError::ZeroProbability { action });
        }
        Ok(p.ln())
    }

    /// Score function at the logits: `onehot(action) − probs`.
    pub fn grad_log_prob_wrt_logits(&self, action: usize) -> Result<Vec<f64>, PolicyError> {
        self.prob(action)?;
        Ok(self
            .probs
            .iter()
            .enumerate()
            .map(|(i, &p)| if i == action { 1.0 - p } else { -p })
            .collect())
    }

    /// Gradient of the cross-entropy `−Σ target_i log p_i` at the logits: `probs − target`.
    pub fn cross_entropy_grad_wrt_logits(&self, target: &[f64]) -> Result<Vec<f64>, PolicyError> {
        if target.len() != self.probs.len() {
            return Err(PolicyError::InvalidDistribution(format!(
                "target has {} entries, distribution has {}",
                target.len(),
                self.probs.len()
            )));
        }
        Ok(self.probs.iter().zip(target).map(|(p, t)| p - t).collect())
    }
}
