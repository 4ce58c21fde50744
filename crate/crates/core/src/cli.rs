//! Command-line experiment harness.
//!
//! Settings resolve in three layers: command-line flags, then an optional
//! TOML file given by `--config`, then the reference hyperparameters for the
//! chosen environment and algorithm. `RISAC_SEED` stands in for `--seed`.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Parser;
use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::envs::{BonusOn, EnvKind, RewardMode};
use crate::ris::{RisSpec, RisVariant};
use crate::train::{
    train, Algorithm, BehaviorRule, BetaMode, FisherScope, ObservationScaling, RunRecord, TrainConfig,
    TrainError,
};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

pub const CSV_HEADER: &str =
    "run_id,seed,algorithm,env,beta,episode,steps,return,avg_return_100,solved";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("numeric fault: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_IO,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }

    fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::NumericFault(msg) => CliError::Numeric(msg),
            other => CliError::Usage(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Default, Parser)]
#[command(name = "risac", version, about = "Relative importance sampling actor-critic experiments")]
pub struct Args {
    /// Environment: mountaincar or cartpole.
    #[arg(long)]
    pub env: Option<EnvKind>,

    /// Algorithm: ac, nac, ris-off-pac or ris-off-pnac.
    #[arg(long = "algo")]
    pub algorithm: Option<Algorithm>,

    /// Fixed β in [0, 1].
    #[arg(long, conflicts_with_all = ["beta_sweep", "beta_uniform"])]
    pub beta: Option<f64>,

    /// Comma-separated β values; each runs `--repeats` seeds.
    #[arg(long, value_delimiter = ',', conflicts_with = "beta_uniform")]
    pub beta_sweep: Option<Vec<f64>>,

    /// Draw β uniformly once per run (the default).
    #[arg(long)]
    pub beta_uniform: bool,

    /// Draw a fresh β at the start of every episode.
    #[arg(long, conflicts_with_all = ["beta", "beta_sweep", "beta_uniform"])]
    pub beta_per_episode: bool,

    /// Weight variant: exp, log, log-complement, ratio-complement, retrace, truncated.
    #[arg(long)]
    pub ris_variant: Option<String>,

    /// Scale of the retrace variant.
    #[arg(long)]
    pub lambda: Option<f64>,

    /// Cap of the truncated variant.
    #[arg(long)]
    pub cap: Option<f64>,

    #[arg(long, env = "RISAC_SEED")]
    pub seed: Option<u64>,

    /// Number of seeds per β value.
    #[arg(long)]
    pub repeats: Option<usize>,

    #[arg(long)]
    pub episodes: Option<usize>,

    #[arg(long)]
    pub max_steps: Option<usize>,

    #[arg(long)]
    pub lr_actor: Option<f64>,

    #[arg(long)]
    pub lr_critic: Option<f64>,

    #[arg(long)]
    pub lr_behavior: Option<f64>,

    #[arg(long)]
    pub gamma: Option<f64>,

    /// shaped or standard.
    #[arg(long)]
    pub reward_mode: Option<RewardMode>,

    /// When the cart-pole bonus is paid: solve or cap.
    #[arg(long)]
    pub bonus_on: Option<BonusOn>,

    /// MountainCar velocity clip.
    #[arg(long)]
    pub velocity_limit: Option<f64>,

    /// Observation preprocessing: unit or raw.
    #[arg(long)]
    pub obs_scaling: Option<ObservationScaling>,

    /// Behavior network rule: distill, pg or mirror.
    #[arg(long)]
    pub behavior: Option<BehaviorRule>,

    /// Parameters covered by the Fisher inverse: head or full.
    #[arg(long)]
    pub fisher_scope: Option<String>,

    /// Keep training after the solve condition fires.
    #[arg(long)]
    pub no_stop: bool,

    /// Treat the per-episode step cap as a terminal state in the TD target.
    #[arg(long)]
    pub mask_step_limit: bool,

    /// CSV output path.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Emit per-episode CSV (to stdout unless `--out` is given).
    #[arg(long)]
    pub csv: bool,

    /// TOML file with defaults for any of the options above.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Keys accepted in a `--config` file; names match the long flags with `_`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub env: Option<EnvKind>,
    pub algo: Option<Algorithm>,
    pub beta: Option<f64>,
    pub beta_sweep: Option<Vec<f64>>,
    pub beta_uniform: Option<bool>,
    pub beta_per_episode: Option<bool>,
    pub ris_variant: Option<String>,
    pub lambda: Option<f64>,
    pub cap: Option<f64>,
    pub seed: Option<u64>,
    pub repeats: Option<usize>,
    pub episodes: Option<usize>,
    pub max_steps: Option<usize>,
    pub lr_actor: Option<f64>,
    pub lr_critic: Option<f64>,
    pub lr_behavior: Option<f64>,
    pub gamma: Option<f64>,
    pub reward_mode: Option<RewardMode>,
    pub bonus_on: Option<BonusOn>,
    pub velocity_limit: Option<f64>,
    pub obs_scaling: Option<ObservationScaling>,
    pub behavior: Option<BehaviorRule>,
    pub fisher_scope: Option<String>,
    pub no_stop: Option<bool>,
    pub mask_step_limit: Option<bool>,
    pub out: Option<PathBuf>,
    pub csv: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Template for every run; `seed` holds the global seed.
    pub train: TrainConfig,
    pub repeats: usize,
    pub beta_sweep: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
    pub csv: bool,
}

fn parse_variant(name: &str) -> Result<RisVariant, CliError> {
    RisVariant::from_name(name).ok_or_else(|| CliError::Usage(format!("unknown RIS variant {name:?}")))
}

fn parse_scope(name: &str) -> Result<FisherScope, CliError> {
    match name {
        "head" => Ok(FisherScope::HeadBlock),
        "full" => Ok(FisherScope::Full),
        other => Err(CliError::Usage(format!("unknown Fisher scope {other:?}"))),
    }
}

fn check_beta(b: f64) -> Result<f64, CliError> {
    if (0.0..=1.0).contains(&b) {
        Ok(b)
    } else {
        Err(CliError::Usage(format!("beta must lie in [0, 1], got {b}")))
    }
}

/// Merges flags over the file over reference defaults.
pub fn resolve(args: Args, file: FileConfig) -> Result<ExperimentConfig, CliError> {
    let env = args.env.or(file.env).unwrap_or(EnvKind::CartPole);
    let algorithm = args.algorithm.or(file.algo).unwrap_or(Algorithm::RisOffPac);
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let mut cfg = TrainConfig::reference(env, algorithm, seed);

    if let Some(v) = args.lr_actor.or(file.lr_actor) {
        cfg.lr.actor = v;
    }
    if let Some(v) = args.lr_critic.or(file.lr_critic) {
        cfg.lr.critic = v;
    }
    if let Some(v) = args.lr_behavior.or(file.lr_behavior) {
        cfg.lr.behavior = v;
    }
    if let Some(v) = args.gamma.or(file.gamma) {
        cfg.gamma = v;
    }
    if let Some(v) = args.episodes.or(file.episodes) {
        cfg.max_episodes = v;
    }
    if let Some(v) = args.max_steps.or(file.max_steps) {
        cfg.max_steps_per_episode = v;
    }
    if let Some(v) = args.reward_mode.or(file.reward_mode) {
        cfg.reward_mode = v;
    }
    if let Some(v) = args.bonus_on.or(file.bonus_on) {
        cfg.bonus_on = v;
    }
    if let Some(v) = args.velocity_limit.or(file.velocity_limit) {
        cfg.velocity_limit = v;
    }
    if let Some(v) = args.obs_scaling.or(file.obs_scaling) {
        cfg.observation_scaling = v;
    }
    if let Some(v) = args.behavior.or(file.behavior) {
        cfg.behavior_rule = v;
    }
    if let Some(name) = args.fisher_scope.or(file.fisher_scope) {
        cfg.fisher_scope = parse_scope(&name)?;
    }
    if args.no_stop || file.no_stop.unwrap_or(false) {
        cfg.stop_on_solve = false;
    }
    if args.mask_step_limit || file.mask_step_limit.unwrap_or(false) {
        cfg.bootstrap_on_step_limit = false;
    }

    let mut ris = RisSpec::default();
    if let Some(name) = args.ris_variant.or(file.ris_variant) {
        ris.variant = parse_variant(&name)?;
    }
    if let Some(l) = args.lambda.or(file.lambda) {
        ris = ris.with_lambda(l).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    if let Some(c) = args.cap.or(file.cap) {
        ris = ris.with_cap(c).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    cfg.ris = ris;

    // A β choice on the command line replaces any β choice in the file.
    let flag_beta_given =
        args.beta.is_some() || args.beta_sweep.is_some() || args.beta_uniform || args.beta_per_episode;
    let (beta, sweep, per_episode) = if flag_beta_given {
        (args.beta, args.beta_sweep, args.beta_per_episode)
    } else {
        (file.beta, file.beta_sweep, file.beta_per_episode.unwrap_or(false))
    };
    cfg.beta_mode = match (beta, per_episode) {
        (Some(b), _) => BetaMode::Fixed(check_beta(b)?),
        (None, true) => BetaMode::UniformPerEpisode,
        (None, false) => BetaMode::UniformPerRun,
    };
    let beta_sweep = match sweep {
        Some(values) if values.is_empty() => {
            return Err(CliError::Usage("beta sweep needs at least one value".into()))
        }
        Some(values) => Some(values.into_iter().map(check_beta).collect::<Result<Vec<_>, _>>()?),
        None => None,
    };

    let repeats = args.repeats.or(file.repeats).unwrap_or(1);
    if repeats == 0 {
        return Err(CliError::Usage("repeats must be at least 1".into()));
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    Ok(ExperimentConfig {
        train: cfg,
        repeats,
        beta_sweep,
        out: args.out.or(file.out),
        csv: args.csv || file.csv.unwrap_or(false),
    })
}

/// Parses `argv` (including the program name) and any `--config` file.
pub fn parse_config<I, T>(argv: I) -> Result<ExperimentConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = Args::try_parse_from(argv).map_err(|e| CliError::Usage(e.to_string()))?;
    let file = match &args.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    resolve(args, file)
}

/// Seed of the `index`-th run derived from the global seed.
pub fn run_seed(global: u64, index: u64) -> u64 {
    // splitmix64 finalizer over a counter offset
    let mut z = global.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One planned run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunPlan {
    pub run_id: usize,
    pub config: TrainConfig,
}

/// The β × seed cross product; seeds are shared across β values.
pub fn plan_runs(exp: &ExperimentConfig) -> Vec<RunPlan> {
    let betas: Vec<Option<f64>> = match &exp.beta_sweep {
        Some(v) => v.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let mut plans = Vec::with_capacity(betas.len() * exp.repeats);
    for beta in betas {
        for rep in 0..exp.repeats {
            let mut config = exp.train;
            config.seed = run_seed(exp.train.seed, rep as u64);
            if let Some(b) = beta {
                config.beta_mode = BetaMode::Fixed(b);
            }
            plans.push(RunPlan {
                run_id: plans.len(),
                config,
            });
        }
    }
    plans
}

/// Runs every planned run in parallel, returned in plan order.
pub fn run_plans(plans: &[RunPlan]) -> Result<Vec<RunRecord>, CliError> {
    plans
        .par_iter()
        .map(|p| train(p.config).map_err(CliError::from))
        .collect()
}

pub fn write_csv<W: Write>(
    mut out: W,
    exp: &ExperimentConfig,
    plans: &[RunPlan],
    records: &[RunRecord],
) -> io::Result<()> {
    writeln!(
        out,
        "# reward_mode={} bonus_on={}",
        exp.train.reward_mode.name(),
        exp.train.bonus_on.name()
    )?;
    writeln!(out, "{CSV_HEADER}")?;
    for (plan, rec) in plans.iter().zip(records) {
        for e in &rec.episodes {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                plan.run_id,
                rec.seed,
                rec.algorithm,
                rec.env,
                e.beta,
                e.episode,
                e.steps,
                e.total_return,
                e.avg_return_100,
                e.solved
            )?;
        }
    }
    out.flush()
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

/// One row per (environment, algorithm): median solve episode, median steps
/// of the solving episode and solve rate.
pub fn summarize(records: &[RunRecord]) -> String {
    let mut groups: Vec<((EnvKind, Algorithm), Vec<&RunRecord>)> = Vec::new();
    for r in records {
        let key = (r.env, r.algorithm);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    let mut text = format!(
        "{:<12} {:<13} {:>5} {:>11} {:>16} {:>14} {:>8}\n",
        "env", "algorithm", "runs", "solve_rate", "episodes_solve", "steps_solve", "diverged"
    );
    for ((env, algo), runs) in groups {
        let mut eps: Vec<f64> = runs.iter().filter_map(|r| r.solved_at).map(|v| v as f64).collect();
        let mut steps: Vec<f64> = runs
            .iter()
            .filter_map(|r| r.solve_episode_steps)
            .map(|v| v as f64)
            .collect();
        let rate = eps.len() as f64 / runs.len() as f64;
        let show = |m: Option<f64>| m.map_or_else(|| "—".to_string(), |v| format!("{v}"));
        let diverged = runs.iter().filter(|r| r.diverged_at.is_some()).count();
        text.push_str(&format!(
            "{:<12} {:<13} {:>5} {:>11.2} {:>16} {:>14} {:>8}\n",
            env.name(),
            algo.name(),
            runs.len(),
            rate,
            show(median(&mut eps)),
            show(median(&mut steps)),
            diverged
        ));
    }
    text
}

/// Runs an experiment and emits CSV and summary. The output file is created
/// before any training starts.
pub fn run_experiment(exp: &ExperimentConfig) -> Result<Vec<RunRecord>, CliError> {
    let file = match &exp.out {
        Some(path) => Some(BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?)),
        None => None,
    };
    let plans = plan_runs(exp);
    let records = run_plans(&plans)?;
    let summary = summarize(&records);
    match (file, exp.csv) {
        (Some(f), _) => {
            let path = exp.out.as_deref().expect("file implies path");
            write_csv(f, exp, &plans, &records).map_err(|e| CliError::io(path, e))?;
            print!("{summary}");
        }
        (None, true) => {
            write_csv(io::stdout().lock(), exp, &plans, &records).map_err(|e| CliError::io("<stdout>", e))?;
            eprint!("{summary}");
        }
        (None, false) => print!("{summary}"),
    }
    if let Some(r) = records.iter().find(|r| r.diverged_at.is_some()) {
        return Err(CliError::Numeric(format!(
            "run with seed {} diverged in episode {}",
            r.seed,
            r.diverged_at.unwrap_or_default()
        )));
    }
    Ok(records)
}
