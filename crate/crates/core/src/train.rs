//! Online actor-critic training loops.
//!
//! Four algorithms share one per-step loop:
//!
//! | algorithm      | executed action | actor weight μ          | actor direction   |
//! |----------------|-----------------|-------------------------|-------------------|
//! | `Ac`           | `a ~ π`         | 1                       | `∇log π`          |
//! | `Nac`          | `a ~ π`         | 1                       | `G⁻¹ ∇log π`      |
//! | `RisOffPac`    | `a ~ b`         | RIS weight of (π, b)    | `∇log π`          |
//! | `RisOffPnac`   | `a ~ b`         | RIS weight of (π, b)    | `G⁻¹ ∇log π`      |
//!
//! Each step computes the TD residual `δ = r + γ V(s') (1 − done) − V(s)`
//! from the executed action's reward, takes a semi-gradient step on `½δ²`
//! for the critic, an ascent step on `μ · log π(a|s) · δ` for the actor and,
//! for the off-policy variants, one step for the behavior network. Every
//! network is optimized with Adam.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envs::{
    cart_pole_angle_threshold, solve_check, CP_X_THRESHOLD, trailing_average, BonusOn, CartPole, CartPoleConfig, DoneReason, EnvError,
    EnvKind, Environment, Integrator, MountainCar, MountainCarConfig, Observation, RewardMode,
};
use crate::nn::{
    adam_step, Activation, AdamConfig, AdamState, Gradients, LayerSpec, MlpNetwork, NnError,
};
use crate::policy::{CategoricalDistribution, PolicyError};
use crate::ris::{ris_weight, PolicyProb, RisError, RisSpec, RisVariant};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numeric fault: {0}")]
    NumericFault(String),

    #[error(transparent)]
    Nn(NnError),

    #[error(transparent)]
    Env(#[from] EnvError),

    #[error(transparent)]
    Ris(#[from] RisError),

    #[error(transparent)]
    Policy(#[from] PolicyError),
}

impl From<NnError> for TrainError {
    fn from(e: NnError) -> Self {
        match e {
            NnError::NumericFault(what) => TrainError::NumericFault(what.to_string()),
            other => TrainError::Nn(other),
        }
    }
}

impl TrainError {
    pub fn is_numeric_fault(&self) -> bool {
        matches!(self, TrainError::NumericFault(_))
    }
}

// ── Configuration ───────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Ac,
    Nac,
    RisOffPac,
    RisOffPnac,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Ac,
        Algorithm::Nac,
        Algorithm::RisOffPac,
        Algorithm::RisOffPnac,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ac => "ac",
            Algorithm::Nac => "nac",
            Algorithm::RisOffPac => "ris-off-pac",
            Algorithm::RisOffPnac => "ris-off-pnac",
        }
    }

    pub fn is_off_policy(self) -> bool {
        matches!(self, Algorithm::RisOffPac | Algorithm::RisOffPnac)
    }

    pub fn is_natural(self) -> bool {
        matches!(self, Algorithm::Nac | Algorithm::RisOffPnac)
    }

    /// Learning rates used in the reference experiments.
    ///
    /// The on-policy algorithms have no behavior network; their behavior
    /// rate is a placeholder that is never used.
    pub fn reference_learning_rates(self, env: EnvKind) -> LearningRates {
        let (actor, critic, behavior) = match (env, self) {
            (EnvKind::MountainCar, Algorithm::Ac) => (1e-3, 5e-3, 1e-3),
            (EnvKind::MountainCar, Algorithm::Nac) => (5e-3, 1e-3, 1e-3),
            (EnvKind::MountainCar, Algorithm::RisOffPac) => (5e-3, 5e-3, 1e-3),
            (EnvKind::MountainCar, Algorithm::RisOffPnac) => (1e-3, 1e-3, 1e-4),
            (EnvKind::CartPole, Algorithm::Ac) => (1e-3, 1e-2, 1e-3),
            (EnvKind::CartPole, Algorithm::Nac) => (1e-3, 1e-2, 1e-3),
            (EnvKind::CartPole, Algorithm::RisOffPac) => (5e-2, 5e-3, 1e-3),
            (EnvKind::CartPole, Algorithm::RisOffPnac) => (5e-2, 1e-2, 1e-3),
        };
        LearningRates {
            actor,
            critic,
            behavior,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningRates {
    pub actor: f64,
    pub critic: f64,
    pub behavior: f64,
}

/// How β is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BetaMode {
    Fixed(f64),
    /// One uniform draw on `[0, 1]` per run.
    UniformPerRun,
    /// A fresh uniform draw at the start of every episode.
    UniformPerEpisode,
}

/// How the behavior network is trained, or whether it exists at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BehaviorRule {
    /// Cross-entropy step toward the actor's distribution at the visited state.
    Distill,
    /// Score-function step `∇log b(a|s) · δ`.
    #[default]
    Pg,
    /// No separate network: `b ≡ π`.
    #[serde(rename = "mirror")]
    MirrorTarget,
}

impl BehaviorRule {
    pub fn name(self) -> &'static str {
        match self {
            BehaviorRule::Distill => "distill",
            BehaviorRule::Pg => "pg",
            BehaviorRule::MirrorTarget => "mirror",
        }
    }
}

impl FromStr for BehaviorRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "distill" => Ok(BehaviorRule::Distill),
            "pg" => Ok(BehaviorRule::Pg),
            "mirror" => Ok(BehaviorRule::MirrorTarget),
            other => Err(format!("unknown behavior rule {other:?}")),
        }
    }
}

/// Which actor parameters the Fisher inverse covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FisherScope {
    /// Output layer weights and biases only.
    #[default]
    HeadBlock,
    /// Every actor parameter.
    Full,
}

/// Preprocessing applied to observations before any network sees them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservationScaling {
    /// Raw simulator state.
    Raw,
    /// Bounded components mapped onto `[-1, 1]`; unbounded ones left as is.
    #[default]
    Unit,
}

impl ObservationScaling {
    pub fn name(self) -> &'static str {
        match self {
            ObservationScaling::Raw => "raw",
            ObservationScaling::Unit => "unit",
        }
    }
}

impl FromStr for ObservationScaling {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw" => Ok(ObservationScaling::Raw),
            "unit" => Ok(ObservationScaling::Unit),
            other => Err(format!("unknown observation scaling {other:?}")),
        }
    }
}

/// Applies `scaling` to raw features of `env`.
///
/// MountainCar position `[-1.2, 0.6]` and velocity `[-0.07, 0.07]` both map to
/// `[-1, 1]`. CartPole position and angle are divided by their failure
/// thresholds; the two velocities are unbounded and pass through.
pub fn scale_observation(env: EnvKind, scaling: ObservationScaling, features: &mut [f64]) {
    if scaling == ObservationScaling::Raw {
        return;
    }
    match env {
        EnvKind::MountainCar => {
            features[0] = (features[0] + 0.3) / 0.9;
            features[1] /= 0.07;
        }
        EnvKind::CartPole => {
            features[0] /= CP_X_THRESHOLD;
            features[2] /= cart_pole_angle_threshold();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    pub env: EnvKind,
    pub gamma: f64,
    pub lr: LearningRates,
    pub ris: RisSpec,
    pub beta_mode: BetaMode,
    pub behavior_rule: BehaviorRule,
    pub fisher_scope: FisherScope,
    /// The Fisher inverse restarts from the identity once any entry exceeds
    /// this magnitude. `f64::INFINITY` disables the restart.
    pub fisher_reset_bound: f64,
    pub max_episodes: usize,
    pub max_steps_per_episode: usize,
    pub seed: u64,
    pub reward_mode: RewardMode,
    pub bonus_on: BonusOn,
    pub velocity_limit: f64,
    pub integrator: Integrator,
    pub stop_on_solve: bool,
    /// Bootstrap from `V(s')` when an episode ends only because of the step
    /// cap; otherwise the cap is treated like a terminal state.
    pub bootstrap_on_step_limit: bool,
    pub hidden_units: usize,
    pub observation_scaling: ObservationScaling,
    pub adam: AdamConfig,
}

impl TrainConfig {
    /// Reference hyperparameters for `algorithm` on `env`.
    pub fn reference(env: EnvKind, algorithm: Algorithm, seed: u64) -> Self {
        Self {
            algorithm,
            env,
            gamma: 0.99,
            lr: algorithm.reference_learning_rates(env),
            ris: RisSpec::default(),
            beta_mode: BetaMode::UniformPerRun,
            behavior_rule: BehaviorRule::Pg,
            fisher_scope: FisherScope::HeadBlock,
            fisher_reset_bound: 1e6,
            max_episodes: 1000,
            max_steps_per_episode: env.default_max_steps(),
            seed,
            reward_mode: RewardMode::Shaped,
            bonus_on: BonusOn::Cap,
            velocity_limit: 0.07,
            integrator: Integrator::Euler,
            stop_on_solve: true,
            bootstrap_on_step_limit: true,
            hidden_units: 24,
            observation_scaling: ObservationScaling::Unit,
            adam: AdamConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: String| Err(TrainError::Config(msg));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma must lie in (0, 1], got {}", self.gamma));
        }
        for (name, v) in [
            ("actor", self.lr.actor),
            ("critic", self.lr.critic),
            ("behavior", self.lr.behavior),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} learning rate must be positive, got {v}"));
            }
        }
        if self.algorithm.is_natural() && self.lr.actor >= 1.0 {
            return bad("natural-gradient variants need an actor rate below 1".into());
        }
        self.ris.validate()?;
        if let BetaMode::Fixed(b) = self.beta_mode {
            if !(0.0..=1.0).contains(&b) {
                return bad(format!("beta must lie in [0, 1], got {b}"));
            }
        }
        if self.max_steps_per_episode == 0 {
            return bad("max steps per episode must be positive".into());
        }
        if self.hidden_units == 0 {
            return bad("hidden layer needs at least one unit".into());
        }
        if self.velocity_limit.is_nan() || self.velocity_limit <= 0.0 {
            return bad(format!("velocity limit must be positive, got {}", self.velocity_limit));
        }
        Ok(())
    }
}

// ── Networks ────────────────────────────────────────────────────────────

pub fn actor_specs(obs_dim: usize, hidden: usize, n_actions: usize) -> Vec<LayerSpec> {
    vec![
        LayerSpec::new(obs_dim, hidden, Activation::Relu),
        LayerSpec::new(hidden, n_actions, Activation::Softmax),
    ]
}

pub fn critic_specs(obs_dim: usize, hidden: usize) -> Vec<LayerSpec> {
    vec![
        LayerSpec::new(obs_dim, hidden, Activation::Relu),
        LayerSpec::new(hidden, 1, Activation::Identity),
    ]
}

pub fn behavior_specs(obs_dim: usize, hidden: usize, n_actions: usize) -> Vec<LayerSpec> {
    vec![
        LayerSpec::new(obs_dim, hidden, Activation::Crelu),
        LayerSpec::new(2 * hidden, n_actions, Activation::Softmax),
    ]
}

/// A network together with its optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct Learner {
    pub net: MlpNetwork,
    pub opt: AdamState,
}

impl Learner {
    pub fn new(net: MlpNetwork, adam: AdamConfig) -> Self {
        let opt = AdamState::new(&net, adam);
        Self { net, opt }
    }

    /// Adam descent step; an all-zero gradient carries no signal and is skipped.
    pub fn descend(&mut self, grads: &Gradients, lr: f64) -> Result<(), TrainError> {
        if grads.values().all(|&g| g == 0.0) {
            return Ok(());
        }
        adam_step(&mut self.net, grads, &mut self.opt, lr)?;
        Ok(())
    }
}

// ── Per-step updates ────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdResidual {
    pub value: f64,
    pub reward: f64,
    pub v_s: f64,
    pub v_next: f64,
    pub done: bool,
}

pub fn td_residual(reward: f64, v_s: f64, v_next: f64, done: bool, gamma: f64) -> TdResidual {
    let bootstrap = if done { 0.0 } else { gamma * v_next };
    TdResidual {
        value: reward + bootstrap - v_s,
        reward,
        v_s,
        v_next,
        done,
    }
}

/// Semi-gradient step on `½δ²`: the gradient at `V(s)` is `−δ`, the bootstrap
/// target is held constant.
pub fn critic_update(
    critic: &mut Learner,
    state: &[f64],
    delta: f64,
    lr: f64,
) -> Result<(), TrainError> {
    if !delta.is_finite() {
        return Err(TrainError::NumericFault(format!("TD residual {delta}")));
    }
    let trace = critic.net.forward(state)?;
    let grads = critic.net.backward(&trace, &[-delta])?;
    critic.descend(&grads, lr)
}

/// Dense inverse Fisher estimate maintained by the rank-one recursion
/// `G⁻¹ ← [G⁻¹ − α (G⁻¹ψ)(G⁻¹ψ)ᵀ / (1 − α + α ψᵀG⁻¹ψ)] / (1 − α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherInverse {
    dim: usize,
    matrix: Vec<f64>,
    step: u64,
}

impl FisherInverse {
    pub fn identity(dim: usize) -> Self {
        let mut matrix = vec![0.0; dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = 1.0;
        }
        Self {
            dim,
            matrix,
            step: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// Row-major `dim × dim` entries.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.matrix[row * self.dim + col]
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.matrix
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn reset(&mut self) {
        *self = Self::identity(self.dim);
    }

    /// One step of the recursion with score vector `psi` and rate `alpha`.
    pub fn update(&mut self, psi: &[f64], alpha: f64) -> Result<(), TrainError> {
        if psi.len() != self.dim {
            return Err(TrainError::Config(format!(
                "score vector has {} entries, Fisher block has {}",
                psi.len(),
                self.dim
            )));
        }
        if !(0.0..1.0).contains(&alpha) {
            return Err(TrainError::Config(format!(
                "Fisher rate must lie in [0, 1), got {alpha}"
            )));
        }
        let u = self.apply(psi);
        let quad: f64 = psi.iter().zip(&u).map(|(a, b)| a * b).sum();
        let denom = 1.0 - alpha + alpha * quad;
        if denom <= 0.0 || !denom.is_finite() {
            return Err(TrainError::NumericFault(format!(
                "Fisher recursion denominator {denom}"
            )));
        }
        let scale = 1.0 / (1.0 - alpha);
        let coeff = alpha / denom;
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                let m = &mut self.matrix[i * d + j];
                *m = scale * (*m - coeff * (u[i] * u[j]));
            }
        }
        self.step += 1;
        if self.matrix.iter().any(|v| !v.is_finite()) {
            return Err(TrainError::NumericFault("Fisher inverse".into()));
        }
        Ok(())
    }
}

/// Number of actor parameters covered by `scope`.
pub fn fisher_dim(actor: &MlpNetwork, scope: FisherScope) -> usize {
    match scope {
        FisherScope::Full => actor.param_count(),
        FisherScope::HeadBlock => actor.layers.last().map_or(0, |l| l.param_count()),
    }
}

fn fisher_offset(actor: &MlpNetwork, scope: FisherScope) -> usize {
    actor.param_count() - fisher_dim(actor, scope)
}

/// Gradient of `log π(a|s)` with respect to every actor parameter.
pub fn actor_score(
    actor: &MlpNetwork,
    state: &[f64],
    action: usize,
) -> Result<(Gradients, CategoricalDistribution), TrainError> {
    let trace = actor.forward(state)?;
    let dist = CategoricalDistribution::from_probs(trace.output().to_vec())?;
    let score = dist.grad_log_prob_wrt_logits(action)?;
    Ok((actor.backward_from_preactivation(&trace, &score)?, dist))
}

/// Ascent direction `weight · δ · ∇log π(a|s)`, optionally premultiplied by the
/// Fisher inverse on its parameter block (after the inverse absorbs this step's score).
pub fn actor_ascent_direction(
    actor: &MlpNetwork,
    state: &[f64],
    action: usize,
    weight: f64,
    delta: f64,
    natural: Option<(&mut FisherInverse, FisherScope, f64)>,
) -> Result<Gradients, TrainError> {
    let (mut grads, _) = actor_score(actor, state, action)?;
    if let Some((fisher, scope, alpha)) = natural {
        let offset = fisher_offset(actor, scope);
        let flat = grads.to_flat();
        let psi = &flat[offset..];
        fisher.update(psi, alpha)?;
        let nat = fisher.apply(psi);
        for (g, n) in grads.values_mut().skip(offset).zip(nat) {
            *g = n;
        }
    }
    grads.scale(weight * delta);
    Ok(grads)
}

/// Actor step ascending `weight · log π(a|s) · δ` (as descent on its negative).
#[allow(clippy::too_many_arguments)]
pub fn actor_update_ris(
    actor: &mut Learner,
    state: &[f64],
    action: usize,
    weight: f64,
    delta: f64,
    lr: f64,
    natural: Option<(&mut FisherInverse, FisherScope)>,
) -> Result<(), TrainError> {
    if !weight.is_finite() || !delta.is_finite() {
        return Err(TrainError::NumericFault(format!(
            "actor step with weight {weight}, residual {delta}"
        )));
    }
    let natural = natural.map(|(f, scope)| (f, scope, lr));
    let mut grads = actor_ascent_direction(&actor.net, state, action, weight, delta, natural)?;
    grads.scale(-1.0);
    actor.descend(&grads, lr)
}

/// One behavior-network step.
///
/// `Distill` descends the cross-entropy from `target_probs` (gradient at the
/// logits is `b − π`); `Pg` ascends `log b(a|s) · δ`.
pub fn behavior_update(
    behavior: &mut Learner,
    state: &[f64],
    target_probs: &[f64],
    rule: BehaviorRule,
    action: usize,
    delta: f64,
    lr: f64,
) -> Result<(), TrainError> {
    let trace = behavior.net.forward(state)?;
    let dist = CategoricalDistribution::from_probs(trace.output().to_vec())?;
    let head = match rule {
        BehaviorRule::Distill => dist.cross_entropy_grad_wrt_logits(target_probs)?,
        BehaviorRule::Pg => dist
            .grad_log_prob_wrt_logits(action)?
            .into_iter()
            .map(|g| -g * delta)
            .collect(),
        BehaviorRule::MirrorTarget => return Ok(()),
    };
    let grads = behavior.net.backward_from_preactivation(&trace, &head)?;
    behavior.descend(&grads, lr)
}

// ── Run records ─────────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    /// 1-based episode index.
    pub episode: usize,
    pub steps: usize,
    pub total_return: f64,
    pub avg_return_100: f64,
    pub solved: bool,
    pub reached_goal: bool,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub env: EnvKind,
    pub seed: u64,
    pub episodes: Vec<EpisodeRecord>,
    /// Episode at which the trailing-100 average first met the threshold.
    pub solved_at: Option<usize>,
    /// Step count of the solving episode.
    pub solve_episode_steps: Option<usize>,
    /// Episode during which a parameter or update became non-finite.
    pub diverged_at: Option<usize>,
}

impl RunRecord {
    pub fn solved(&self) -> bool {
        self.solved_at.is_some()
    }

    pub fn reached_goal(&self) -> bool {
        self.episodes.iter().any(|e| e.reached_goal)
    }

    pub fn total_steps(&self) -> usize {
        self.episodes.iter().map(|e| e.steps).sum()
    }
}

// ── Trainer ─────────────────────────────────────────────────────────────

/// Independent random streams derived from one seed.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
enum Stream {
    ActorInit = 1,
    CriticInit = 2,
    BehaviorInit = 3,
    Env = 4,
    Action = 5,
    Beta = 6,
}

fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

enum AnyEnv {
    MountainCar(MountainCar),
    CartPole(CartPole),
}

impl AnyEnv {
    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self {
            AnyEnv::MountainCar(e) => e.reset(rng).features(),
            AnyEnv::CartPole(e) => e.reset(rng).features(),
        }
    }

    fn step(&mut self, action: usize) -> Result<(Vec<f64>, f64, bool, DoneReason), EnvError> {
        match self {
            AnyEnv::MountainCar(e) => e
                .step(action)
                .map(|r| (r.next_state.features(), r.reward, r.done, r.done_reason)),
            AnyEnv::CartPole(e) => e
                .step(action)
                .map(|r| (r.next_state.features(), r.reward, r.done, r.done_reason)),
        }
    }
}

/// Networks and optimizer state of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub actor: Learner,
    pub critic: Learner,
    pub behavior: Option<Learner>,
    pub fisher: Option<FisherInverse>,
}

/// Owns one seeded run; drive it episode by episode or call [`Trainer::run`].
pub struct Trainer {
    config: TrainConfig,
    agent: Agent,
    env: AnyEnv,
    env_rng: ChaCha8Rng,
    action_rng: ChaCha8Rng,
    beta_rng: ChaCha8Rng,
    run_beta: f64,
    returns: Vec<f64>,
    actions: Vec<usize>,
    record: RunRecord,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self, TrainError> {
        config.validate()?;
        let kind = config.env;
        let (obs, n_act, hidden) = (kind.observation_dim(), kind.n_actions(), config.hidden_units);
        let actor = MlpNetwork::new(
            &actor_specs(obs, hidden, n_act),
            &mut stream_rng(config.seed, Stream::ActorInit),
        )?;
        let critic = MlpNetwork::new(
            &critic_specs(obs, hidden),
            &mut stream_rng(config.seed, Stream::CriticInit),
        )?;
        let behavior = if config.algorithm.is_off_policy()
            && config.behavior_rule != BehaviorRule::MirrorTarget
        {
            Some(Learner::new(
                MlpNetwork::new(
                    &behavior_specs(obs, hidden, n_act),
                    &mut stream_rng(config.seed, Stream::BehaviorInit),
                )?,
                config.adam,
            ))
        } else {
            None
        };
        let fisher = config
            .algorithm
            .is_natural()
            .then(|| FisherInverse::identity(fisher_dim(&actor, config.fisher_scope)));
        let env = match kind {
            EnvKind::MountainCar => AnyEnv::MountainCar(MountainCar::new(MountainCarConfig {
                velocity_limit: config.velocity_limit,
                reward_mode: config.reward_mode,
                max_steps: config.max_steps_per_episode,
            })),
            EnvKind::CartPole => AnyEnv::CartPole(CartPole::new(CartPoleConfig {
                reward_mode: config.reward_mode,
                bonus_on: config.bonus_on,
                integrator: config.integrator,
                max_steps: config.max_steps_per_episode,
            })),
        };
        let mut beta_rng = stream_rng(config.seed, Stream::Beta);
        let run_beta = match config.beta_mode {
            BetaMode::Fixed(b) => b,
            BetaMode::UniformPerRun | BetaMode::UniformPerEpisode => beta_rng.gen_range(0.0..=1.0),
        };
        Ok(Self {
            agent: Agent {
                actor: Learner::new(actor, config.adam),
                critic: Learner::new(critic, config.adam),
                behavior,
                fisher,
            },
            env,
            env_rng: stream_rng(config.seed, Stream::Env),
            action_rng: stream_rng(config.seed, Stream::Action),
            beta_rng,
            run_beta,
            returns: Vec::new(),
            actions: Vec::new(),
            record: RunRecord {
                algorithm: config.algorithm,
                env: kind,
                seed: config.seed,
                episodes: Vec::new(),
                solved_at: None,
                solve_episode_steps: None,
                diverged_at: None,
            },
            config,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn agent(&self) -> &Agent {
        &self.agent
    }

    /// Mutable access, e.g. to overwrite initial weights in experiments.
    pub fn agent_mut(&mut self) -> &mut Agent {
        &mut self.agent
    }

    pub fn record(&self) -> &RunRecord {
        &self.record
    }

    /// Actions executed during the most recent episode.
    pub fn last_episode_actions(&self) -> &[usize] {
        &self.actions
    }

    /// True when the run should not continue.
    pub fn finished(&self) -> bool {
        self.record.diverged_at.is_some()
            || self.record.episodes.len() >= self.config.max_episodes
            || (self.config.stop_on_solve && self.record.solved())
    }

    /// Runs one episode. Numeric faults end the run and are recorded rather
    /// than returned.
    pub fn run_episode(&mut self) -> Result<&EpisodeRecord, TrainError> {
        let episode = self.record.episodes.len() + 1;
        let beta = match self.config.beta_mode {
            BetaMode::UniformPerEpisode if episode > 1 => self.beta_rng.gen_range(0.0..=1.0),
            _ => self.run_beta,
        };
        let spec = self.config.ris.with_beta(beta)?;
        let outcome = self.play_episode(&spec);
        let (steps, total_return, reached_goal) = match outcome {
            Ok(v) => v,
            Err(EpisodeFault { steps, total_return, error }) => {
                if !error.is_numeric_fault() {
                    return Err(error);
                }
                self.record.diverged_at = Some(episode);
                (steps, total_return, false)
            }
        };
        self.returns.push(total_return);
        let solved = solve_check(&self.returns, self.config.env);
        if solved && self.record.solved_at.is_none() {
            self.record.solved_at = Some(episode);
            self.record.solve_episode_steps = Some(steps);
        }
        self.record.episodes.push(EpisodeRecord {
            episode,
            steps,
            total_return,
            avg_return_100: trailing_average(&self.returns, 100).unwrap_or(total_return),
            solved,
            reached_goal,
            beta,
        });
        Ok(self.record.episodes.last().expect("just pushed"))
    }

    /// Runs until solved (if configured), diverged, or out of episodes.
    pub fn run(mut self) -> Result<RunRecord, TrainError> {
        while !self.finished() {
            self.run_episode()?;
        }
        Ok(self.record)
    }

    fn play_episode(&mut self, spec: &RisSpec) -> Result<(usize, f64, bool), EpisodeFault> {
        let mut steps = 0;
        let mut total_return = 0.0;
        self.actions.clear();
        let mut state = self.env.reset(&mut self.env_rng);
        scale_observation(self.config.env, self.config.observation_scaling, &mut state);
        loop {
            let step = self
                .train_step(&state, spec)
                .map_err(|error| EpisodeFault {
                    steps,
                    total_return,
                    error,
                })?;
            steps += 1;
            total_return += step.reward;
            if step.done {
                return Ok((steps, total_return, step.reason == DoneReason::Goal));
            }
            state = step.next_state;
        }
    }

    fn train_step(&mut self, state: &[f64], spec: &RisSpec) -> Result<StepOutcome, TrainError> {
        let cfg = self.config;
        let agent = &mut self.agent;
        let pi = CategoricalDistribution::from_probs(agent.actor.net.predict(state)?)?;
        let b = match &agent.behavior {
            Some(beh) => CategoricalDistribution::from_probs(beh.net.predict(state)?)?,
            None => pi.clone(),
        };
        let action = if cfg.algorithm.is_off_policy() {
            b.sample(&mut self.action_rng)
        } else {
            pi.sample(&mut self.action_rng)
        };
        self.actions.push(action);
        let (mut next_state, reward, done, reason) = self.env.step(action)?;
        scale_observation(cfg.env, cfg.observation_scaling, &mut next_state);

        let weight = if cfg.algorithm.is_off_policy() {
            ris_weight(
                spec,
                PolicyProb::new(pi.prob(action)?)?,
                PolicyProb::new(b.prob(action)?)?,
            )?
        } else {
            1.0
        };

        let v_s = agent.critic.net.predict(state)?[0];
        let v_next = agent.critic.net.predict(&next_state)?[0];
        let terminal = done && !(cfg.bootstrap_on_step_limit && reason == DoneReason::StepLimit);
        let td = td_residual(reward, v_s, v_next, terminal, cfg.gamma);
        critic_update(&mut agent.critic, state, td.value, cfg.lr.critic)?;

        let natural = agent.fisher.as_mut().map(|f| (f, cfg.fisher_scope));
        actor_update_ris(
            &mut agent.actor,
            state,
            action,
            weight,
            td.value,
            cfg.lr.actor,
            natural,
        )?;
        if let Some(f) = agent.fisher.as_mut() {
            if f.max_abs() > cfg.fisher_reset_bound {
                f.reset();
            }
        }

        if let Some(beh) = agent.behavior.as_mut() {
            behavior_update(
                beh,
                state,
                pi.probs(),
                cfg.behavior_rule,
                action,
                td.value,
                cfg.lr.behavior,
            )?;
        }
        Ok(StepOutcome {
            next_state,
            reward,
            done,
            reason,
        })
    }
}

struct StepOutcome {
    next_state: Vec<f64>,
    reward: f64,
    done: bool,
    reason: DoneReason,
}

struct EpisodeFault {
    steps: usize,
    total_return: f64,
    error: TrainError,
}

/// Runs one seeded training run to completion.
pub fn train(config: TrainConfig) -> Result<RunRecord, TrainError> {
    if config.max_episodes == 0 {
        config.validate()?;
        return Ok(RunRecord {
            algorithm: config.algorithm,
            env: config.env,
            seed: config.seed,
            episodes: Vec::new(),
            solved_at: None,
            solve_episode_steps: None,
            diverged_at: None,
        });
    }
    Trainer::new(config)?.run()
}

/// Whether `variant` weights can be used as actor step sizes; the log forms
/// can be negative and flip the update direction.
pub fn variant_is_nonnegative(variant: RisVariant) -> bool {
    !matches!(variant, RisVariant::LogSmoothed | RisVariant::LogComplement)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ris::{exp_smoothed_weight, is_ratio, log_reduced_weight};

    fn small_actor(seed: u64) -> Learner {
        let net = MlpNetwork::new(&actor_specs(4, 6, 2), &mut stream_rng(seed, Stream::ActorInit)).unwrap();
        Learner::new(net, AdamConfig::default())
    }

    #[test]
    fn td_residual_examples() {
        assert_eq!(td_residual(2.5, 0.0, 0.0, false, 0.9).value, 2.5);
        assert_eq!(td_residual(-1.0, 2.0, 100.0, true, 0.99).value, -3.0);
        assert!(td_residual(0.0, 0.99, 1.0, false, 0.99).value.abs() < 1e-15);
    }

    #[test]
    fn critic_zero_residual_is_noop() {
        let net = MlpNetwork::new(&critic_specs(4, 6), &mut stream_rng(1, Stream::CriticInit)).unwrap();
        let mut critic = Learner::new(net, AdamConfig::default());
        let before = critic.clone();
        critic_update(&mut critic, &[0.1, 0.2, 0.3, 0.4], 0.0, 0.1).unwrap();
        assert_eq!(critic, before);
        assert!(critic_update(&mut critic, &[0.1, 0.2, 0.3, 0.4], f64::NAN, 0.1).is_err());
    }

    #[test]
    fn scalar_critic_gradient_and_fixed_point() {
        // V(s) = w: a bias-only identity layer on a zero input.
        let mut net = MlpNetwork::zeros(&[LayerSpec::new(1, 1, Activation::Identity)]).unwrap();
        net.layers[0].bias[0] = 0.5;
        let trace = net.forward(&[0.0]).unwrap();
        let r = 2.0;
        let delta = td_residual(r, 0.5, 0.0, true, 0.99).value;
        let g = net.backward(&trace, &[-delta]).unwrap();
        assert_eq!(g.layers[0].bias[0], -(r - 0.5));

        let mut critic = Learner::new(net, AdamConfig::default());
        let mut last_loss = f64::INFINITY;
        for _ in 0..20_000 {
            let v = critic.net.predict(&[0.0]).unwrap()[0];
            let delta = td_residual(r, v, 0.0, true, 0.99).value;
            let loss = 0.5 * delta * delta;
            assert!(loss <= last_loss + 1e-12);
            last_loss = loss;
            critic_update(&mut critic, &[0.0], delta, 1e-3).unwrap();
        }
        let v = critic.net.predict(&[0.0]).unwrap()[0];
        assert!((v - r).abs() < 1e-2, "v = {v}");
    }

    #[test]
    fn actor_noop_cases() {
        let s = [0.02, -0.01, 0.03, 0.0];
        let mut actor = small_actor(3);
        let before = actor.clone();
        actor_update_ris(&mut actor, &s, 0, 1.0, 0.0, 0.05, None).unwrap();
        assert_eq!(actor, before);
        actor_update_ris(&mut actor, &s, 0, 0.0, 3.0, 0.05, None).unwrap();
        assert_eq!(actor, before);
    }

    #[test]
    fn actor_step_raises_advantaged_action() {
        let s = [0.02, -0.01, 0.03, 0.5];
        let mut actor = small_actor(4);
        let p0 = actor.net.predict(&s).unwrap()[1];
        actor_update_ris(&mut actor, &s, 1, 1.0, 1.0, 1e-2, None).unwrap();
        assert!(actor.net.predict(&s).unwrap()[1] > p0);
    }

    #[test]
    fn unit_weight_matches_on_policy_step() {
        let s = [0.1, 0.0, -0.2, 0.3];
        let base = small_actor(5);
        let mut on_policy = base.clone();
        actor_update_ris(&mut on_policy, &s, 1, 1.0, 0.7, 0.05, None).unwrap();
        for b in [0.05, 0.5, 0.95] {
            let pi = PolicyProb::new(base.net.predict(&s).unwrap()[1]).unwrap();
            let w = exp_smoothed_weight(pi, PolicyProb::new(b).unwrap(), 1.0);
            let mut off = base.clone();
            actor_update_ris(&mut off, &s, 1, w, 0.7, 0.05, None).unwrap();
            assert_eq!(off, on_policy);
        }
    }

    #[test]
    fn zero_beta_log_reduced_matches_classic_is() {
        let s = [0.1, 0.4, -0.2, 0.3];
        let base = small_actor(6);
        let pi = PolicyProb::new(base.net.predict(&s).unwrap()[0]).unwrap();
        let b = PolicyProb::new(0.3).unwrap();
        let mut ris = base.clone();
        let mut classic = base.clone();
        actor_update_ris(&mut ris, &s, 0, log_reduced_weight(pi, b, 0.0).unwrap(), -0.4, 0.05, None).unwrap();
        actor_update_ris(&mut classic, &s, 0, is_ratio(pi, b).unwrap(), -0.4, 0.05, None).unwrap();
        assert_eq!(ris, classic);
    }

    #[test]
    fn behavior_distill_cases() {
        let s = [0.1, 0.2];
        let net = MlpNetwork::new(&behavior_specs(2, 4, 2), &mut stream_rng(7, Stream::BehaviorInit)).unwrap();
        let mut beh = Learner::new(net, AdamConfig::default());
        let own = beh.net.predict(&s).unwrap();
        let before = beh.clone();
        behavior_update(&mut beh, &s, &own, BehaviorRule::Distill, 0, 1.0, 1e-2).unwrap();
        assert_eq!(beh, before);

        behavior_update(&mut beh, &s, &[1.0, 0.0], BehaviorRule::Distill, 0, 0.0, 0.0).unwrap();
        assert_eq!(beh.net, before.net);

        let p0 = beh.net.predict(&s).unwrap()[0];
        behavior_update(&mut beh, &s, &[1.0, 0.0], BehaviorRule::Distill, 0, 0.0, 1e-2).unwrap();
        assert!(beh.net.predict(&s).unwrap()[0] > p0);
    }

    #[test]
    fn behavior_pg_follows_residual() {
        let s = [0.1, 0.2];
        let net = MlpNetwork::new(&behavior_specs(2, 4, 2), &mut stream_rng(8, Stream::BehaviorInit)).unwrap();
        let mut beh = Learner::new(net, AdamConfig::default());
        let p1 = beh.net.predict(&s).unwrap()[1];
        behavior_update(&mut beh, &s, &[0.5, 0.5], BehaviorRule::Pg, 1, 2.0, 1e-2).unwrap();
        assert!(beh.net.predict(&s).unwrap()[1] > p1);
    }

    #[test]
    fn fisher_trivial_updates() {
        let mut f = FisherInverse::identity(3);
        f.update(&[0.3, -1.0, 2.0], 0.0).unwrap();
        assert_eq!(f, FisherInverse { step: 1, ..FisherInverse::identity(3) });

        let mut f = FisherInverse::identity(3);
        f.update(&[0.0; 3], 0.2).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 / 0.8 } else { 0.0 };
                assert!((f.get(i, j) - expected).abs() < 1e-15);
            }
        }
        assert!(f.update(&[0.0; 2], 0.2).is_err());
        assert!(f.update(&[0.0; 3], 1.0).is_err());
    }

    #[test]
    fn fisher_single_update_inverts_rank_one_mix() {
        // (1 − α) I + α e₁e₁ᵀ = diag(1, 0.5) at α = 0.5.
        let mut f = FisherInverse::identity(2);
        f.update(&[1.0, 0.0], 0.5).unwrap();
        assert!((f.get(0, 0) - 1.0).abs() < 1e-15);
        assert!((f.get(1, 1) - 2.0).abs() < 1e-15);
        assert_eq!(f.get(0, 1), 0.0);
    }

    #[test]
    fn reference_rates() {
        let lr = Algorithm::RisOffPac.reference_learning_rates(EnvKind::CartPole);
        assert_eq!((lr.actor, lr.critic, lr.behavior), (5e-2, 5e-3, 1e-3));
        let lr = Algorithm::RisOffPnac.reference_learning_rates(EnvKind::MountainCar);
        assert_eq!((lr.actor, lr.critic, lr.behavior), (1e-3, 1e-3, 1e-4));
    }

    #[test]
    fn config_validation() {
        let mut c = TrainConfig::reference(EnvKind::CartPole, Algorithm::Ac, 0);
        assert!(c.validate().is_ok());
        c.gamma = 0.0;
        assert!(c.validate().is_err());
        let mut c = TrainConfig::reference(EnvKind::CartPole, Algorithm::Ac, 0);
        c.lr.critic = 0.0;
        assert!(c.validate().is_err());
        let mut c = TrainConfig::reference(EnvKind::CartPole, Algorithm::Ac, 0);
        c.beta_mode = BetaMode::Fixed(1.5);
        assert!(c.validate().is_err());
    }

    #[test]
    fn zero_episodes_gives_empty_record() {
        let mut c = TrainConfig::reference(EnvKind::CartPole, Algorithm::RisOffPac, 0);
        c.max_episodes = 0;
        let r = train(c).unwrap();
        assert!(r.episodes.is_empty());
        assert!(!r.solved());
    }

    #[test]
    fn algorithm_names_parse() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("sac".parse::<Algorithm>().is_err());
    }
}
