//! MountainCar and CartPole with deterministic physics.
//!
//! Dynamics follow the classic Gym formulations. Rewards follow the
//! experiment-specific scheme: MountainCar pays −20 on reaching the goal and
//! −1 otherwise; CartPole pays 1 per step plus a +160 goal bonus.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("action {action} out of range for {n_actions} actions")]
    ActionOutOfRange { action: usize, n_actions: usize },

    #[error("episode already finished; call reset first")]
    EpisodeDone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    MountainCar,
    CartPole,
}

impl EnvKind {
    pub fn name(self) -> &'static str {
        match self {
            EnvKind::MountainCar => "mountaincar",
            EnvKind::CartPole => "cartpole",
        }
    }

    /// Trailing-100 average return that counts as solved.
    pub fn solve_threshold(self) -> f64 {
        match self {
            EnvKind::MountainCar => -110.0,
            EnvKind::CartPole => 195.0,
        }
    }

    pub fn default_max_steps(self) -> usize {
        match self {
            EnvKind::MountainCar => 200,
            EnvKind::CartPole => 1000,
        }
    }

    pub fn observation_dim(self) -> usize {
        match self {
            EnvKind::MountainCar => 2,
            EnvKind::CartPole => 4,
        }
    }

    pub fn n_actions(self) -> usize {
        match self {
            EnvKind::MountainCar => 3,
            EnvKind::CartPole => 2,
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mountaincar" => Ok(EnvKind::MountainCar),
            "cartpole" => Ok(EnvKind::CartPole),
            other => Err(format!("unknown environment {other:?}")),
        }
    }
}

/// Which reward scheme to pay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardMode {
    /// −20 at the MountainCar goal, +160 CartPole goal bonus.
    #[default]
    Shaped,
    /// −1 every MountainCar step, +1 every CartPole step.
    Standard,
}

impl RewardMode {
    pub fn name(self) -> &'static str {
        match self {
            RewardMode::Shaped => "shaped",
            RewardMode::Standard => "standard",
        }
    }
}

impl FromStr for RewardMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "shaped" => Ok(RewardMode::Shaped),
            "standard" => Ok(RewardMode::Standard),
            other => Err(format!("unknown reward mode {other:?}")),
        }
    }
}

/// When the CartPole goal bonus is paid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BonusOn {
    /// On the step where the episode's running return first reaches the
    /// solve threshold (195).
    Solve,
    /// On the step that survives to the per-episode step cap.
    #[default]
    Cap,
}

impl BonusOn {
    pub fn name(self) -> &'static str {
        match self {
            BonusOn::Solve => "solve",
            BonusOn::Cap => "cap",
        }
    }
}

impl FromStr for BonusOn {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "solve" => Ok(BonusOn::Solve),
            "cap" => Ok(BonusOn::Cap),
            other => Err(format!("unknown bonus trigger {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DoneReason {
    Goal,
    Failure,
    StepLimit,
    None,
}

impl DoneReason {
    pub fn name(self) -> &'static str {
        match self {
            DoneReason::Goal => "goal",
            DoneReason::Failure => "failure",
            DoneReason::StepLimit => "step_limit",
            DoneReason::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult<S> {
    pub next_state: S,
    pub reward: f64,
    pub done: bool,
    pub done_reason: DoneReason,
}

/// Anything that can be fed to a network.
pub trait Observation {
    fn features(&self) -> Vec<f64>;
}

/// Episodic environment with a discrete action set.
pub trait Environment {
    type State: Observation + Clone;

    fn kind(&self) -> EnvKind;
    fn n_actions(&self) -> usize {
        self.kind().n_actions()
    }
    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Self::State;
    fn step(&mut self, action: usize) -> Result<StepResult<Self::State>, EnvError>;
    fn state(&self) -> &Self::State;
}

/// True once the trailing-100 average return reaches the environment's threshold.
pub fn solve_check(returns: &[f64], kind: EnvKind) -> bool {
    trailing_average(returns, 100)
        .is_some_and(|avg| returns.len() >= 100 && avg >= kind.solve_threshold())
}

/// Mean of the last `min(window, len)` values, `None` when empty.
pub fn trailing_average(values: &[f64], window: usize) -> Option<f64> {
    if values.is_empty() || window == 0 {
        return None;
    }
    let tail = &values[values.len().saturating_sub(window)..];
    Some(tail.iter().sum::<f64>() / tail.len() as f64)
}

// ── MountainCar ─────────────────────────────────────────────────────────

pub const MC_MIN_POSITION: f64 = -1.2;
pub const MC_MAX_POSITION: f64 = 0.6;
pub const MC_GOAL_POSITION: f64 = 0.5;
pub const MC_FORCE: f64 = 0.001;
pub const MC_GRAVITY: f64 = 0.0025;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MountainCarState {
    pub position: f64,
    pub velocity: f64,
}

impl Observation for MountainCarState {
    fn features(&self) -> Vec<f64> {
        vec![self.position, self.velocity]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MountainCarConfig {
    /// Symmetric velocity clip; the Gym value is 0.07.
    pub velocity_limit: f64,
    pub reward_mode: RewardMode,
    pub max_steps: usize,
}

impl Default for MountainCarConfig {
    fn default() -> Self {
        Self {
            velocity_limit: 0.07,
            reward_mode: RewardMode::Shaped,
            max_steps: EnvKind::MountainCar.default_max_steps(),
        }
    }
}

pub fn mountain_car_reset<R: Rng + ?Sized>(rng: &mut R) -> MountainCarState {
    MountainCarState {
        position: rng.gen_range(-0.6..=-0.4),
        velocity: 0.0,
    }
}

/// One MountainCar transition, ignoring the episode step cap.
pub fn mountain_car_step(
    state: MountainCarState,
    action: usize,
    config: &MountainCarConfig,
) -> Result<StepResult<MountainCarState>, EnvError> {
    if action > 2 {
        return Err(EnvError::ActionOutOfRange {
            action,
            n_actions: 3,
        });
    }
    let limit = config.velocity_limit;
    let mut velocity = state.velocity + (action as f64 - 1.0) * MC_FORCE
        - MC_GRAVITY * (3.0 * state.position).cos();
    velocity = velocity.clamp(-limit, limit);
    let position = (state.position + velocity).clamp(MC_MIN_POSITION, MC_MAX_POSITION);
    if position == MC_MIN_POSITION && velocity < 0.0 {
        velocity = 0.0;
    }
    let goal = position >= MC_GOAL_POSITION;
    let reward = match (goal, config.reward_mode) {
        (true, RewardMode::Shaped) => -20.0,
        _ => -1.0,
    };
    Ok(StepResult {
        next_state: MountainCarState { position, velocity },
        reward,
        done: goal,
        done_reason: if goal { DoneReason::Goal } else { DoneReason::None },
    })
}

#[derive(Debug, Clone)]
pub struct MountainCar {
    pub config: MountainCarConfig,
    state: MountainCarState,
    steps: usize,
    done: bool,
}

impl MountainCar {
    pub fn new(config: MountainCarConfig) -> Self {
        Self {
            config,
            state: MountainCarState {
                position: -0.5,
                velocity: 0.0,
            },
            steps: 0,
            done: false,
        }
    }

    /// Starts an episode from a chosen state.
    pub fn reset_to(&mut self, state: MountainCarState) {
        self.state = state;
        self.steps = 0;
        self.done = false;
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
}

impl Environment for MountainCar {
    type State = MountainCarState;

    fn kind(&self) -> EnvKind {
        EnvKind::MountainCar
    }

    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> MountainCarState {
        self.reset_to(mountain_car_reset(rng));
        self.state
    }

    fn step(&mut self, action: usize) -> Result<StepResult<MountainCarState>, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeDone);
        }
        let mut result = mountain_car_step(self.state, action, &self.config)?;
        self.steps += 1;
        if !result.done && self.steps >= self.config.max_steps {
            result.done = true;
            result.done_reason = DoneReason::StepLimit;
        }
        self.state = result.next_state;
        self.done = result.done;
        Ok(result)
    }

    fn state(&self) -> &MountainCarState {
        &self.state
    }
}

// ── CartPole ────────────────────────────────────────────────────────────

pub const CP_GRAVITY: f64 = 9.8;
pub const CP_CART_MASS: f64 = 1.0;
pub const CP_POLE_MASS: f64 = 0.1;
pub const CP_HALF_LENGTH: f64 = 0.5;
pub const CP_FORCE: f64 = 10.0;
pub const CP_TAU: f64 = 0.02;
pub const CP_X_THRESHOLD: f64 = 2.4;
pub const CP_GOAL_BONUS: f64 = 160.0;

/// 12 degrees.
pub fn cart_pole_angle_threshold() -> f64 {
    12.0 * 2.0 * std::f64::consts::PI / 360.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartPoleState {
    pub cart_position: f64,
    pub cart_velocity: f64,
    pub pole_angle: f64,
    pub pole_angular_velocity: f64,
}

impl CartPoleState {
    pub fn is_failure(&self) -> bool {
        self.cart_position.abs() > CP_X_THRESHOLD || self.pole_angle.abs() > cart_pole_angle_threshold()
    }
}

impl Observation for CartPoleState {
    fn features(&self) -> Vec<f64> {
        vec![
            self.cart_position,
            self.cart_velocity,
            self.pole_angle,
            self.pole_angular_velocity,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    /// Positions advance with the old velocities (Gym default).
    #[default]
    Euler,
    /// Velocities first, then positions with the new velocities.
    SemiImplicitEuler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartPoleConfig {
    pub reward_mode: RewardMode,
    pub bonus_on: BonusOn,
    pub integrator: Integrator,
    pub max_steps: usize,
}

impl Default for CartPoleConfig {
    fn default() -> Self {
        Self {
            reward_mode: RewardMode::Shaped,
            bonus_on: BonusOn::Cap,
            integrator: Integrator::Euler,
            max_steps: EnvKind::CartPole.default_max_steps(),
        }
    }
}

pub fn cart_pole_reset<R: Rng + ?Sized>(rng: &mut R) -> CartPoleState {
    let mut draw = || rng.gen_range(-0.05..=0.05);
    CartPoleState {
        cart_position: draw(),
        cart_velocity: draw(),
        pole_angle: draw(),
        pole_angular_velocity: draw(),
    }
}

/// Physics only: integrates one timestep of the cart-pole equations.
pub fn cart_pole_dynamics(state: CartPoleState, action: usize, integrator: Integrator) -> CartPoleState {
    let force = if action == 1 { CP_FORCE } else { -CP_FORCE };
    let total_mass = CP_CART_MASS + CP_POLE_MASS;
    let polemass_length = CP_POLE_MASS * CP_HALF_LENGTH;
    let CartPoleState {
        cart_position: x,
        cart_velocity: x_dot,
        pole_angle: theta,
        pole_angular_velocity: theta_dot,
    } = state;
    let (sin, cos) = theta.sin_cos();
    let temp = (force + polemass_length * theta_dot * theta_dot * sin) / total_mass;
    let theta_acc = (CP_GRAVITY * sin - cos * temp)
        / (CP_HALF_LENGTH * (4.0 / 3.0 - CP_POLE_MASS * cos * cos / total_mass));
    let x_acc = temp - polemass_length * theta_acc * cos / total_mass;
    match integrator {
        Integrator::Euler => CartPoleState {
            cart_position: x + CP_TAU * x_dot,
            cart_velocity: x_dot + CP_TAU * x_acc,
            pole_angle: theta + CP_TAU * theta_dot,
            pole_angular_velocity: theta_dot + CP_TAU * theta_acc,
        },
        Integrator::SemiImplicitEuler => {
            let x_dot = x_dot + CP_TAU * x_acc;
            let theta_dot = theta_dot + CP_TAU * theta_acc;
            CartPoleState {
                cart_position: x + CP_TAU * x_dot,
                cart_velocity: x_dot,
                pole_angle: theta + CP_TAU * theta_dot,
                pole_angular_velocity: theta_dot,
            }
        }
    }
}

/// One CartPole transition with failure termination and per-step reward 1.
///
/// The goal bonus depends on episode context and is applied by [`CartPole::step`].
pub fn cart_pole_step(
    state: CartPoleState,
    action: usize,
    integrator: Integrator,
) -> Result<StepResult<CartPoleState>, EnvError> {
    if action > 1 {
        return Err(EnvError::ActionOutOfRange {
            action,
            n_actions: 2,
        });
    }
    let next = cart_pole_dynamics(state, action, integrator);
    let failed = next.is_failure();
    Ok(StepResult {
        next_state: next,
        reward: 1.0,
        done: failed,
        done_reason: if failed {
            DoneReason::Failure
        } else {
            DoneReason::None
        },
    })
}

#[derive(Debug, Clone)]
pub struct CartPole {
    pub config: CartPoleConfig,
    state: CartPoleState,
    steps: usize,
    episode_return: f64,
    bonus_paid: bool,
    done: bool,
}

impl CartPole {
    pub fn new(config: CartPoleConfig) -> Self {
        Self {
            config,
            state: CartPoleState {
                cart_position: 0.0,
                cart_velocity: 0.0,
                pole_angle: 0.0,
                pole_angular_velocity: 0.0,
            },
            steps: 0,
            episode_return: 0.0,
            bonus_paid: false,
            done: false,
        }
    }

    pub fn reset_to(&mut self, state: CartPoleState) {
        self.state = state;
        self.steps = 0;
        self.episode_return = 0.0;
        self.bonus_paid = false;
        self.done = state.is_failure();
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
}

impl Environment for CartPole {
    type State = CartPoleState;

    fn kind(&self) -> EnvKind {
        EnvKind::CartPole
    }

    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> CartPoleState {
        self.reset_to(cart_pole_reset(rng));
        self.state
    }

    fn step(&mut self, action: usize) -> Result<StepResult<CartPoleState>, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeDone);
        }
        let mut result = cart_pole_step(self.state, action, self.config.integrator)?;
        self.steps += 1;
        let hit_cap = self.steps >= self.config.max_steps;
        if !result.done && hit_cap {
            result.done = true;
            result.done_reason = DoneReason::StepLimit;
        }
        if self.config.reward_mode == RewardMode::Shaped && !self.bonus_paid {
            let goal = match self.config.bonus_on {
                BonusOn::Cap => result.done_reason == DoneReason::StepLimit,
                BonusOn::Solve => {
                    result.done_reason != DoneReason::Failure
                        && self.episode_return + result.reward >= EnvKind::CartPole.solve_threshold()
                }
            };
            if goal {
                result.reward = CP_GOAL_BONUS;
                self.bonus_paid = true;
            }
        }
        self.episode_return += result.reward;
        self.state = result.next_state;
        self.done = result.done;
        Ok(result)
    }

    fn state(&self) -> &CartPoleState {
        &self.state
    }
}
