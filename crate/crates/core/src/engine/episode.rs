//! A single traversal over the features.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::env::FeatureEnv;
use super::weights::{incremental_weight, stop_probability};
use super::{BehaviorMode, TrainConfig};
use crate::error::Result;
use crate::qlearner::{epsilon_greedy, greedy_action, random_policy, softmax, ActionSample, QNetwork};
use crate::reward::shaped_reward;
use crate::state::StateVector;
use crate::subset::FeatureSubset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStep {
    pub t: usize,
    pub feature: usize,
    /// State before the decision.
    pub state: StateVector,
    pub action: u8,
    /// Reward used for learning (shaped inside the advising window).
    pub reward: f64,
    /// Unshaped environment reward.
    pub env_reward: f64,
    pub pi_prob: f64,
    pub b_prob: f64,
    pub rho: f64,
    pub stop_prob: f64,
    /// Weight after the early-stopping correction; filled in by the trainer.
    pub recalc_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub steps: Vec<EpisodeStep>,
    pub traversal_order: Vec<usize>,
    pub stopped_early: bool,
    /// Cut short because the global step budget ran out.
    pub truncated: bool,
    pub final_subset: FeatureSubset,
    pub final_eval: f64,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Shaped reward while `global_step <= advise_steps`, the raw reward after.
pub fn apply_advice(r: f64, u_now: f64, u_next: f64, config: &TrainConfig, global_step: usize) -> f64 {
    if global_step <= config.advise_steps {
        shaped_reward(r, u_now, u_next, config.gamma, config.shaping_coeff)
    } else {
        r
    }
}

fn sample_action<R: Rng + ?Sized>(mode: BehaviorMode, q0: f64, q1: f64, epsilon: f64, rng: &mut R) -> ActionSample {
    match mode {
        BehaviorMode::Greedy => epsilon_greedy(q0, q1, epsilon, rng),
        BehaviorMode::Random => random_policy(rng),
        BehaviorMode::Target => {
            let pi = softmax(q0, q1);
            let action = u8::from(rng.random::<f64>() >= pi.p0);
            ActionSample { action, prob: pi.prob(action) }
        }
    }
}

/// Walks `order`, deciding on one feature per step. `global_step` counts
/// environment steps across episodes; the walk also ends once it reaches
/// `config.max_global_steps`.
pub fn traverse_episode<R: Rng + ?Sized>(
    env: &mut FeatureEnv,
    net: &QNetwork,
    order: &[usize],
    config: &TrainConfig,
    rng: &mut R,
    global_step: &mut usize,
) -> Result<Episode> {
    let mut subset = FeatureSubset::empty();
    let mut steps = Vec::with_capacity(order.len());
    let mut rho = 1.0;
    let mut stopped_early = false;
    let mut truncated = false;
    for (t, &feature) in order.iter().enumerate() {
        let state = env.state(&subset)?;
        let (q0, q1) = net.q_values(&state)?;
        let sample = sample_action(config.behavior, q0, q1, config.epsilon, rng);
        let pi_prob = softmax(q0, q1).prob(sample.action);
        rho = incremental_weight(rho, pi_prob, sample.prob)?;

        let u_now = env.utility(&subset);
        if sample.action == 1 {
            subset.insert(feature);
        }
        let u_next = env.utility(&subset);
        let env_reward = env.reward(&subset)?;
        *global_step += 1;
        let reward = apply_advice(env_reward, u_now, u_next, config, *global_step);
        let stop_prob = stop_probability(rho, config.stop_threshold);
        steps.push(EpisodeStep {
            t,
            feature,
            state,
            action: sample.action,
            reward,
            env_reward,
            pi_prob,
            b_prob: sample.prob,
            rho,
            stop_prob,
            recalc_weight: rho,
        });
        let more = t + 1 < order.len();
        if more && *global_step >= config.max_global_steps {
            truncated = true;
            break;
        }
        if more && stop_prob > 0.0 && rng.random::<f64>() < stop_prob {
            stopped_early = true;
            break;
        }
    }
    let final_eval = env.reward(&subset)?;
    Ok(Episode { steps, traversal_order: order.to_vec(), stopped_early, truncated, final_subset: subset, final_eval })
}

/// Greedy pass over every feature in index order with no stopping.
pub fn final_selection(net: &QNetwork, env: &FeatureEnv) -> Result<FeatureSubset> {
    let mut subset = FeatureSubset::empty();
    for f in 0..env.n_features() {
        let (q0, q1) = net.q_values(&env.state(&subset)?)?;
        if greedy_action(q0, q1) == 1 {
            subset.insert(f);
        }
    }
    Ok(subset)
}
