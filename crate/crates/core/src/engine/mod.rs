//! Monte Carlo training loop with importance sampling, early stopping,
//! history re-ranking and early reward advising.

mod env;
mod episode;
mod history;
mod weights;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use env::{EnvSettings, FeatureEnv};
pub use episode::{apply_advice, final_selection, traverse_episode, Episode, EpisodeStep};
pub use history::DecisionHistory;
pub use weights::{
    compute_returns, incremental_weight, normalizer, recalc_weights, stop_probability, survival_probability,
    RecalcMode, ReturnMode,
};

use crate::dataset::Split;
use crate::downstream::ForestParams;
use crate::error::{Error, Result};
use crate::qlearner::{check_epsilon, QNetwork, ReplayMemory, Transition, BATCH_SIZE, MEMORY_CAPACITY};
use crate::reward::{RewardWeights, UtilityMode};
use crate::state::StateRepr;
use crate::subset::FeatureSubset;

/// Which policy generates the episodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BehaviorMode {
    /// Epsilon-greedy over the current Q values.
    #[default]
    Greedy,
    /// Uniform coin flips.
    Random,
    /// Sample from the softmax target policy itself (on-policy).
    Target,
}

impl BehaviorMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BehaviorMode::Greedy => "greedy",
            BehaviorMode::Random => "random",
            BehaviorMode::Target => "target",
        }
    }
}

impl std::str::FromStr for BehaviorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(BehaviorMode::Greedy),
            "random" => Ok(BehaviorMode::Random),
            "target" => Ok(BehaviorMode::Target),
            other => Err(Error::InvalidArgument(format!("unknown behavior policy `{other}`"))),
        }
    }
}

impl std::str::FromStr for ReturnMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(ReturnMode::Forward),
            "paper" | "paper_literal" => Ok(ReturnMode::PaperLiteral),
            other => Err(Error::InvalidArgument(format!("unknown return mode `{other}`"))),
        }
    }
}

impl std::str::FromStr for RecalcMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rc" | "rejection_control" => Ok(RecalcMode::RejectionControl),
            "paper" | "paper_literal" => Ok(RecalcMode::PaperLiteral),
            other => Err(Error::InvalidArgument(format!("unknown recalc mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub episodes: usize,
    pub gamma: f64,
    pub epsilon: f64,
    /// Early-stopping threshold `v`; 0 disables stopping.
    pub stop_threshold: f64,
    pub shaping_coeff: f64,
    /// Length of the advising window in global environment steps.
    pub advise_steps: usize,
    pub max_global_steps: usize,
    pub batch_size: usize,
    pub memory_capacity: usize,
    pub lr: f64,
    /// Mini-batch updates after each episode.
    pub updates_per_episode: usize,
    pub return_mode: ReturnMode,
    pub recalc_mode: RecalcMode,
    pub behavior: BehaviorMode,
    pub state_repr: StateRepr,
    pub utility: UtilityMode,
    pub weights: RewardWeights,
    pub forest: ForestParams,
    /// Train share of the nested split used for rewards.
    pub reward_split: f64,
    /// Re-rank the traversal order by decision counts before each episode.
    pub decision_history: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            episodes: 300,
            gamma: 0.9,
            epsilon: 0.1,
            stop_threshold: 0.5,
            shaping_coeff: 1.0,
            advise_steps: 500,
            max_global_steps: 3000,
            batch_size: BATCH_SIZE,
            memory_capacity: MEMORY_CAPACITY,
            lr: 0.01,
            updates_per_episode: 4,
            return_mode: ReturnMode::Forward,
            recalc_mode: RecalcMode::RejectionControl,
            behavior: BehaviorMode::Greedy,
            state_repr: StateRepr::Meta,
            utility: UtilityMode::RvRd,
            weights: RewardWeights::default(),
            forest: ForestParams::default(),
            reward_split: 0.6,
            decision_history: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        fn bad(msg: String) -> Result<()> {
            Err(Error::InvalidArgument(msg))
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        check_epsilon(self.epsilon)?;
        if !(0.0..=1.0).contains(&self.stop_threshold) {
            return bad(format!("stop threshold must lie in [0, 1], got {}", self.stop_threshold));
        }
        if !(self.shaping_coeff >= 0.0 && self.shaping_coeff.is_finite()) {
            return bad(format!("shaping coefficient must be finite and >= 0, got {}", self.shaping_coeff));
        }
        if self.episodes == 0 || self.max_global_steps == 0 {
            return bad("episodes and max_global_steps must be positive".into());
        }
        if self.batch_size == 0 || self.memory_capacity == 0 || self.updates_per_episode == 0 {
            return bad("batch size, memory capacity and updates per episode must be positive".into());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.lr));
        }
        if self.forest.n_trees == 0 || self.forest.max_depth == 0 {
            return bad("forest needs at least one tree of depth >= 1".into());
        }
        if !(self.reward_split > 0.0 && self.reward_split < 1.0) {
            return bad(format!("reward split ratio must lie in (0, 1), got {}", self.reward_split));
        }
        self.weights.validate()
    }

    pub fn env_settings(&self) -> EnvSettings {
        EnvSettings {
            weights: self.weights,
            utility_mode: self.utility,
            forest: self.forest,
            state_repr: self.state_repr,
            inner_ratio: self.reward_split,
            seed: self.seed,
        }
    }
}

/// One point of the training curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub eval: f64,
    pub length: usize,
    pub loss: f64,
    pub stopped_early: bool,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub best_subset: FeatureSubset,
    pub best_eval: f64,
    /// Greedy pass of the trained network, without stopping.
    pub greedy_subset: FeatureSubset,
    pub greedy_eval: f64,
    pub curves: Vec<EpisodeRecord>,
    pub decision_counts: Vec<u64>,
    pub global_steps: usize,
    pub forest_fits: usize,
    #[serde(skip)]
    pub network: Option<QNetwork>,
}

/// Step-by-step driver for the training loop.
pub struct Trainer {
    config: TrainConfig,
    env: FeatureEnv,
    net: QNetwork,
    memory: ReplayMemory,
    history: DecisionHistory,
    rng: ChaCha8Rng,
    global_step: usize,
    best: Option<(FeatureSubset, f64)>,
    curves: Vec<EpisodeRecord>,
}

impl Trainer {
    /// Only `split.train` is used; the test fold is left for reporting.
    pub fn new(split: &Split, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        let env = FeatureEnv::new(&split.train, &config.env_settings())?;
        let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
        init_rng.set_stream(1);
        let net = QNetwork::new(env.state_dim(), &mut init_rng);
        Ok(Trainer {
            memory: ReplayMemory::new(config.memory_capacity),
            history: DecisionHistory::new(env.n_features()),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config: config.clone(),
            env,
            net,
            global_step: 0,
            best: None,
            curves: Vec::new(),
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn env(&self) -> &FeatureEnv {
        &self.env
    }

    pub fn network(&self) -> &QNetwork {
        &self.net
    }

    pub fn memory(&self) -> &ReplayMemory {
        &self.memory
    }

    pub fn history(&self) -> &DecisionHistory {
        &self.history
    }

    pub fn global_step(&self) -> usize {
        self.global_step
    }

    pub fn curves(&self) -> &[EpisodeRecord] {
        &self.curves
    }

    pub fn best(&self) -> Option<(&FeatureSubset, f64)> {
        self.best.as_ref().map(|(s, e)| (s, *e))
    }

    pub fn is_done(&self) -> bool {
        self.curves.len() >= self.config.episodes || self.global_step >= self.config.max_global_steps
    }

    /// Runs one episode and the updates that follow it. `None` once the
    /// episode or step budget is spent.
    pub fn run_episode(&mut self) -> Result<Option<Episode>> {
        if self.is_done() {
            return Ok(None);
        }
        let start = Instant::now();
        let cfg = &self.config;
        let order: Vec<usize> =
            if cfg.decision_history { self.history.rerank() } else { (0..self.env.n_features()).collect() };
        let mut episode =
            traverse_episode(&mut self.env, &self.net, &order, cfg, &mut self.rng, &mut self.global_step)?;
        self.history.record(episode.steps.iter().map(|s| s.feature));

        let rewards: Vec<f64> = episode.steps.iter().map(|s| s.reward).collect();
        let returns = compute_returns(&rewards, cfg.gamma, cfg.return_mode);
        let v = cfg.stop_threshold;
        let rhos: Vec<f64> = episode.steps.iter().map(|s| s.rho).collect();
        let new_surv: Vec<f64> = rhos.iter().map(|&r| survival_probability(r, v)).collect();
        // survival rates of exactly the entries that will sit in memory
        let kept_old = (self.memory.capacity().saturating_sub(new_surv.len())).min(self.memory.len());
        let skip = self.memory.len() - kept_old;
        let in_memory = self.memory.iter().skip(skip).map(|t| t.survival).chain(new_surv.iter().copied());
        let in_memory: Vec<f64> = in_memory.collect();
        let in_memory = &in_memory[in_memory.len().saturating_sub(self.memory.capacity())..];
        let p_v = normalizer(cfg.recalc_mode, in_memory.iter().copied());
        let weights = recalc_weights(&rhos, v, p_v, cfg.recalc_mode)?;

        for ((step, w), (g, surv)) in episode.steps.iter_mut().zip(&weights).zip(returns.iter().zip(&new_surv)) {
            step.recalc_weight = *w;
            let target = w * g;
            if !target.is_finite() {
                return Err(Error::NonFiniteTarget(target));
            }
            self.memory.push(Transition { state: step.state.clone(), action: step.action, target, survival: *surv });
        }

        let mut loss = 0.0;
        for _ in 0..cfg.updates_per_episode {
            let batch = self.memory.sample(cfg.batch_size, &mut self.rng)?;
            loss += self.net.train_step(&batch, cfg.lr)?;
        }
        loss /= cfg.updates_per_episode as f64;

        if self.best.as_ref().is_none_or(|(_, e)| episode.final_eval > *e) {
            self.best = Some((episode.final_subset.clone(), episode.final_eval));
        }
        self.curves.push(EpisodeRecord {
            episode: self.curves.len() + 1,
            eval: episode.final_eval,
            length: episode.len(),
            loss,
            stopped_early: episode.stopped_early,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        Ok(Some(episode))
    }

    pub fn finish(mut self) -> Result<TrainOutcome> {
        let (best_subset, best_eval) = self.best.take().unwrap_or((FeatureSubset::empty(), 0.0));
        let greedy_subset = final_selection(&self.net, &self.env)?;
        let greedy_eval = self.env.reward(&greedy_subset)?;
        Ok(TrainOutcome {
            best_subset,
            best_eval,
            greedy_subset,
            greedy_eval,
            curves: self.curves,
            decision_counts: self.history.counts().to_vec(),
            global_steps: self.global_step,
            forest_fits: self.env.forest_fits(),
            network: Some(self.net),
        })
    }
}

/// Trains on `split.train` until the episode or global-step budget is spent.
pub fn train(split: &Split, config: &TrainConfig) -> Result<TrainOutcome> {
    let mut trainer = Trainer::new(split, config)?;
    while trainer.run_episode()?.is_some() {}
    trainer.finish()
}

#[cfg(test)]
mod tests;
