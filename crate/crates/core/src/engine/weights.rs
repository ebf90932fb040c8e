//! Importance weights, rejection-control reweighting and returns.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How accumulated rewards are formed from an episode's reward sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnMode {
    /// `G_t = sum_{k >= t} gamma^(k-t) r_k`.
    #[default]
    Forward,
    /// `G_t = sum_{j <= t} gamma^(t-j) r_j`, discounting past rewards.
    PaperLiteral,
}

/// How per-step weights are corrected after probabilistic early stopping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecalcMode {
    /// Divide by the survival probability `min(1, rho / v)`, scale by the
    /// mean survival probability over replay memory.
    #[default]
    RejectionControl,
    /// Divide by the stop probability and scale by its memory mean. Fails
    /// whenever a step had zero stop probability.
    PaperLiteral,
}

/// `max(0, 1 - rho / v)`; a threshold of 0 disables stopping.
pub fn stop_probability(rho: f64, v: f64) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    (1.0 - rho / v).clamp(0.0, 1.0)
}

/// `min(1, rho / v)`, the probability that a traversal continues.
pub fn survival_probability(rho: f64, v: f64) -> f64 {
    if v <= 0.0 {
        return 1.0;
    }
    (rho / v).min(1.0)
}

/// `rho_prev * pi / b`.
pub fn incremental_weight(rho_prev: f64, pi_prob: f64, b_prob: f64) -> Result<f64> {
    if !(b_prob > 0.0) {
        return Err(Error::InvalidArgument(format!("behavior probability must be positive, got {b_prob}")));
    }
    if !(rho_prev >= 0.0) || !(pi_prob >= 0.0) {
        return Err(Error::InvalidArgument(format!("invalid weight update ({rho_prev}, {pi_prob})")));
    }
    Ok(rho_prev * pi_prob / b_prob)
}

/// The per-episode normalizer: mean survival probability for rejection
/// control, mean stop probability for the literal form.
pub fn normalizer(mode: RecalcMode, survivals: impl IntoIterator<Item = f64>) -> f64 {
    let mut n = 0usize;
    let mut sum = 0.0;
    for s in survivals {
        n += 1;
        sum += match mode {
            RecalcMode::RejectionControl => s,
            RecalcMode::PaperLiteral => 1.0 - s,
        };
    }
    if n == 0 {
        1.0
    } else {
        sum / n as f64
    }
}

/// Reweights each step's cumulative importance weight `rhos[t]` after early
/// stopping with threshold `v`. `p_v` comes from [`normalizer`].
pub fn recalc_weights(rhos: &[f64], v: f64, p_v: f64, mode: RecalcMode) -> Result<Vec<f64>> {
    rhos.iter()
        .enumerate()
        .map(|(t, &rho)| match mode {
            RecalcMode::RejectionControl => Ok(p_v * rho / survival_probability(rho, v)),
            RecalcMode::PaperLiteral => {
                let p = stop_probability(rho, v);
                if p == 0.0 {
                    Err(Error::ZeroStopProbability { step: t })
                } else {
                    Ok(p_v * rho / p)
                }
            }
        })
        .collect()
}

pub fn compute_returns(rewards: &[f64], gamma: f64, mode: ReturnMode) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    match mode {
        ReturnMode::Forward => {
            let mut acc = 0.0;
            for t in (0..rewards.len()).rev() {
                acc = rewards[t] + gamma * acc;
                out[t] = acc;
            }
        }
        ReturnMode::PaperLiteral => {
            let mut acc = 0.0;
            for t in 0..rewards.len() {
                acc = gamma * acc + rewards[t];
                out[t] = acc;
            }
        }
    }
    out
}
