//! Importance weights for off-policy correction.
//!
//! Classical importance sampling uses the raw ratio `π(a|s) / b(a|s)`, which is
//! unbounded whenever the behavior policy assigns little mass to an action the
//! target policy likes. Relative importance sampling (RIS) replaces the
//! denominator with a β-convex combination of target and behavior terms:
//!
//! ```text
//! μ_β = e^π / (β e^π + (1 − β) e^b)
//! ```
//!
//! For β > 0 this weight never exceeds `1/β`, β = 1 yields the constant weight 1,
//! and β = 0 gives `e^(π − b)`, whose log-reduced form `π / b` is the classical
//! ratio. The remaining variants (log-smoothed, complement forms, relative
//! Retrace and truncated RIS) are alternative members of the same family.
//!
//! All functions here are pure.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RisError {
    #[error("probability must lie in (0, 1], got {0}")]
    InvalidProbability(f64),

    #[error("behavior policy lacks coverage: weight denominator is {0}")]
    DegenerateSupport(f64),

    #[error("complement form is undefined for b(a|s) = 1")]
    DegenerateComplement,

    #[error("{name} must lie in {range}, got {value}")]
    ParameterOutOfRange {
        name: &'static str,
        range: &'static str,
        value: f64,
    },

    #[error("estimator needs at least one sample")]
    EmptyInput,
}

/// Probability assigned by a policy to one (state, action) pair.
///
/// Zero is representable so that callers can ask about actions outside the
/// behavior policy's support; [`PolicyProb::new`] accepts `[0, 1]` and the
/// weight functions report [`RisError::DegenerateSupport`] where zero matters.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PolicyProb(f64);

impl PolicyProb {
    pub fn new(value: f64) -> Result<Self, RisError> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(RisError::InvalidProbability(value))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Member of the importance-weight family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RisVariant {
    /// `π / b`; β is ignored.
    ClassicIs,
    /// `e^π / (β e^π + (1 − β) e^b)`.
    ExpSmoothed,
    /// `log π / (β log π + (1 − β) log b)`.
    LogSmoothed,
    /// `log π / (β log(1/π) + (1 − β) log(1/(1 − b)))`.
    LogComplement,
    /// `π / (β/π + (1 − β)/(1 − b))`.
    RatioComplement,
    /// `λ · min(1, π / (β π + (1 − β) b))`.
    RelativeRetrace,
    /// `min(c, π / (β π + (1 − β) b))`.
    TruncatedRis,
}

impl RisVariant {
    pub const ALL: [RisVariant; 7] = [
        RisVariant::ClassicIs,
        RisVariant::ExpSmoothed,
        RisVariant::LogSmoothed,
        RisVariant::LogComplement,
        RisVariant::RatioComplement,
        RisVariant::RelativeRetrace,
        RisVariant::TruncatedRis,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RisVariant::ClassicIs => "classic",
            RisVariant::ExpSmoothed => "exp",
            RisVariant::LogSmoothed => "log",
            RisVariant::LogComplement => "log-complement",
            RisVariant::RatioComplement => "ratio-complement",
            RisVariant::RelativeRetrace => "retrace",
            RisVariant::TruncatedRis => "truncated",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == name)
    }
}

/// Estimator selector plus its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RisSpec {
    pub variant: RisVariant,
    pub beta: f64,
    /// Decay for [`RisVariant::RelativeRetrace`].
    pub lambda: f64,
    /// Cap for [`RisVariant::TruncatedRis`].
    pub cap: f64,
}

impl RisSpec {
    pub fn new(variant: RisVariant, beta: f64) -> Result<Self, RisError> {
        let spec = Self {
            variant,
            beta,
            lambda: 1.0,
            cap: 1.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn exp_smoothed(beta: f64) -> Result<Self, RisError> {
        Self::new(RisVariant::ExpSmoothed, beta)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self, RisError> {
        self.lambda = lambda;
        self.validate()?;
        Ok(self)
    }

    pub fn with_cap(mut self, cap: f64) -> Result<Self, RisError> {
        self.cap = cap;
        self.validate()?;
        Ok(self)
    }

    /// Same spec with a different β (used when β is drawn per run or episode).
    pub fn with_beta(mut self, beta: f64) -> Result<Self, RisError> {
        self.beta = beta;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), RisError> {
        check_unit("beta", self.beta)?;
        check_unit("lambda", self.lambda)?;
        if !(self.cap.is_finite() && self.cap > 0.0) {
            return Err(RisError::ParameterOutOfRange {
                name: "cap",
                range: "(0, inf)",
                value: self.cap,
            });
        }
        Ok(())
    }

    /// Weight for one (π, b) pair under this spec.
    pub fn weight(&self, pi: PolicyProb, b: PolicyProb) -> Result<f64, RisError> {
        ris_weight(self, pi, b)
    }
}

impl Default for RisSpec {
    fn default() -> Self {
        Self {
            variant: RisVariant::ExpSmoothed,
            beta: 0.5,
            lambda: 1.0,
            cap: 1.0,
        }
    }
}

/// One behavior-policy sample: target and behavior probabilities of the
/// sampled action and the discounted return observed after it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedSample {
    pub pi_prob: PolicyProb,
    pub b_prob: PolicyProb,
    pub return_value: f64,
}

fn check_unit(name: &'static str, value: f64) -> Result<(), RisError> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(RisError::ParameterOutOfRange {
            name,
            range: "[0, 1]",
            value,
        })
    }
}

/// Classical importance ratio `π / b`.
pub fn is_ratio(pi: PolicyProb, b: PolicyProb) -> Result<f64, RisError> {
    if b.value() <= 0.0 {
        return Err(RisError::DegenerateSupport(b.value()));
    }
    Ok(pi.value() / b.value())
}

/// Exponentially smoothed relative weight `e^π / (β e^π + (1 − β) e^b)`.
///
/// Evaluated as `1 / (1 + (1 − β)(e^(b−π) − 1))`, which is exactly 1 when
/// β = 1 or π = b. The denominator is positive for every input in `[0, 1]`,
/// so this never fails.
pub fn exp_smoothed_weight(pi: PolicyProb, b: PolicyProb, beta: f64) -> f64 {
    1.0 / (1.0 + (1.0 - beta) * (b.value() - pi.value()).exp_m1())
}

/// Log-reduced exponentially smoothed weight: `log(e^π) / log(β e^π + (1 − β) e^b)`.
///
/// The denominator is evaluated as `b + ln(1 + β (e^(π−b) − 1))` so that at
/// β = 0 it is exactly `b` and the weight is bitwise equal to [`is_ratio`].
pub fn log_reduced_weight(pi: PolicyProb, b: PolicyProb, beta: f64) -> Result<f64, RisError> {
    let (p, q) = (pi.value(), b.value());
    let denom = q + (beta * (p - q).exp_m1()).ln_1p();
    if denom <= 0.0 {
        return Err(RisError::DegenerateSupport(denom));
    }
    Ok(p / denom)
}

/// Mixed denominator `β π + (1 − β) b` shared by Retrace and TRIS.
fn mixed_ratio(pi: PolicyProb, b: PolicyProb, beta: f64) -> Result<f64, RisError> {
    let denom = beta * pi.value() + (1.0 - beta) * b.value();
    if denom <= 0.0 {
        return Err(RisError::DegenerateSupport(denom));
    }
    Ok(pi.value() / denom)
}

/// Relative Retrace(λ) coefficient `λ · min(1, π / (β π + (1 − β) b))`.
pub fn relative_retrace(
    pi: PolicyProb,
    b: PolicyProb,
    beta: f64,
    lambda: f64,
) -> Result<f64, RisError> {
    check_unit("beta", beta)?;
    check_unit("lambda", lambda)?;
    Ok(lambda * mixed_ratio(pi, b, beta)?.min(1.0))
}

/// Truncated RIS `min(c, π / (β π + (1 − β) b))`.
pub fn truncated_ris(pi: PolicyProb, b: PolicyProb, beta: f64, cap: f64) -> Result<f64, RisError> {
    check_unit("beta", beta)?;
    if !(cap.is_finite() && cap > 0.0) {
        return Err(RisError::ParameterOutOfRange {
            name: "cap",
            range: "(0, inf)",
            value: cap,
        });
    }
    Ok(mixed_ratio(pi, b, beta)?.min(cap))
}

/// Importance weight for `(π, b)` under `spec`.
///
/// The log-smoothed and log-complement forms take logarithms of probabilities
/// and can therefore be negative; they are evaluated exactly as written.
pub fn ris_weight(spec: &RisSpec, pi: PolicyProb, b: PolicyProb) -> Result<f64, RisError> {
    spec.validate()?;
    let beta = spec.beta;
    let (p, q) = (pi.value(), b.value());
    let weight = match spec.variant {
        RisVariant::ClassicIs => is_ratio(pi, b)?,
        RisVariant::ExpSmoothed => exp_smoothed_weight(pi, b, beta),
        RisVariant::LogSmoothed => {
            let denom = beta * p.ln() + (1.0 - beta) * q.ln();
            if denom == 0.0 {
                // π = b = 1 is the only way to get here; numerator is 0 too.
                if p.ln() == 0.0 {
                    return Ok(1.0);
                }
                return Err(RisError::DegenerateSupport(denom));
            }
            let w = p.ln() / denom;
            if !w.is_finite() {
                return Err(RisError::DegenerateSupport(denom));
            }
            w
        }
        RisVariant::LogComplement => {
            if q >= 1.0 {
                return Err(RisError::DegenerateComplement);
            }
            let denom = beta * (1.0 / p).ln() + (1.0 - beta) * (1.0 / (1.0 - q)).ln();
            let w = p.ln() / denom;
            if denom == 0.0 || !w.is_finite() {
                return Err(RisError::DegenerateSupport(denom));
            }
            w
        }
        RisVariant::RatioComplement => {
            if q >= 1.0 {
                return Err(RisError::DegenerateComplement);
            }
            let denom = beta / p + (1.0 - beta) / (1.0 - q);
            let w = p / denom;
            if !w.is_finite() {
                return Err(RisError::DegenerateSupport(denom));
            }
            w
        }
        RisVariant::RelativeRetrace => relative_retrace(pi, b, beta, spec.lambda)?,
        RisVariant::TruncatedRis => truncated_ris(pi, b, beta, spec.cap)?,
    };
    Ok(weight)
}

/// Sample average of `weight(π, b) · R`.
pub fn weighted_expectation_estimate<F>(
    samples: &[WeightedSample],
    mut weight: F,
) -> Result<f64, RisError>
where
    F: FnMut(PolicyProb, PolicyProb) -> Result<f64, RisError>,
{
    if samples.is_empty() {
        return Err(RisError::EmptyInput);
    }
    let mut sum = 0.0;
    for s in samples {
        sum += weight(s.pi_prob, s.b_prob)? * s.return_value;
    }
    Ok(sum / samples.len() as f64)
}

/// RIS estimate of `E_π[R]` from behavior samples using the exponentially
/// smoothed weight.
pub fn ris_expectation_estimate(samples: &[WeightedSample], beta: f64) -> Result<f64, RisError> {
    check_unit("beta", beta)?;
    weighted_expectation_estimate(samples, |p, q| Ok(exp_smoothed_weight(p, q, beta)))
}

/// Classical IS estimate of `E_π[R]` from behavior samples.
pub fn is_expectation_estimate(samples: &[WeightedSample]) -> Result<f64, RisError> {
    weighted_expectation_estimate(samples, is_ratio)
}

/// Discounted return `Σ_k γ^k r_k` of a finite reward sequence.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc)
}
