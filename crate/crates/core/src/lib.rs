//! Relative importance sampling actor-critic.
//!
//! Off-policy actor-critic learners whose importance weights are smoothed by
//! a parameter β ∈ [0, 1]: β = 0 gives the classical ratio π/b, β = 1 gives a
//! constant weight of one. The crate bundles everything needed to run the
//! algorithms end to end:
//!
//! - [`ris`]: importance weights and sample estimators
//! - [`nn`]: small dense networks with manual backpropagation and Adam
//! - [`policy`]: categorical action distributions
//! - [`envs`]: MountainCar and CartPole simulators
//! - [`train`]: AC, NAC, RIS-off-PAC and RIS-off-PNAC training loops
//! - [`oracles`]: brute-force reference computations used by the tests
//! - [`cli`]: the experiment harness behind the `risac` binary

pub mod cli;
pub mod envs;
pub mod nn;
pub mod oracles;
pub mod policy;
pub mod ris;
pub mod train;

pub use envs::{BonusOn, CartPole, EnvKind, Environment, MountainCar, RewardMode};
pub use nn::{AdamConfig, MlpNetwork};
pub use policy::CategoricalDistribution;
pub use ris::{exp_smoothed_weight, is_ratio, ris_weight, PolicyProb, RisSpec, RisVariant};
pub use train::{train, Algorithm, BetaMode, RunRecord, TrainConfig, Trainer};
