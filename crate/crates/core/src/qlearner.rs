//! Q-function, target/behavior policies and replay memory.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Adam, Mlp};

pub const HIDDEN_SIZES: [usize; 2] = [64, 8];
pub const MEMORY_CAPACITY: usize = 200;
pub const BATCH_SIZE: usize = 16;

/// Two-output value network: `Q(s, deselect)`, `Q(s, select)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QNetwork {
    mlp: Mlp,
    adam: Adam,
}

impl QNetwork {
    pub fn new<R: Rng + ?Sized>(state_dim: usize, rng: &mut R) -> Self {
        Self::from_mlp(Mlp::new(&[state_dim, HIDDEN_SIZES[0], HIDDEN_SIZES[1], 2], rng))
    }

    pub fn zeros(state_dim: usize) -> Self {
        Self::from_mlp(Mlp::zeros(&[state_dim, HIDDEN_SIZES[0], HIDDEN_SIZES[1], 2]))
    }

    /// Wraps an arbitrary MLP with two outputs (used for small test nets).
    pub fn from_mlp(mlp: Mlp) -> Self {
        assert_eq!(mlp.output_dim(), 2, "Q-network must have two outputs");
        let adam = Adam::new(mlp.params().len());
        QNetwork { mlp, adam }
    }

    pub fn state_dim(&self) -> usize {
        self.mlp.input_dim()
    }

    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        self.mlp.params_mut()
    }

    pub fn adam(&self) -> &Adam {
        &self.adam
    }

    pub fn q_values(&self, state: &[f64]) -> Result<(f64, f64)> {
        let out = self.mlp.forward(state)?;
        Ok((out[0], out[1]))
    }

    /// Mean squared error between `Q(s, a)` and each stored target, with its
    /// gradient with respect to the flat parameter vector.
    pub fn loss_and_grad(&self, batch: &[&Transition]) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::InvalidArgument("training batch is empty".into()));
        }
        let n = batch.len() as f64;
        let mut grads = vec![0.0; self.mlp.params().len()];
        let mut loss = 0.0;
        for tr in batch {
            if !tr.target.is_finite() {
                return Err(Error::NonFiniteTarget(tr.target));
            }
            let (q0, q1) = self.q_values(&tr.state)?;
            let q = if tr.action == 1 { q1 } else { q0 };
            let err = q - tr.target;
            loss += err * err / n;
            let mut g = [0.0, 0.0];
            g[usize::from(tr.action == 1)] = 2.0 * err / n;
            self.mlp.accumulate_grad(&tr.state, &g, &mut grads)?;
        }
        Ok((loss, grads))
    }

    /// One Adam step on the batch; returns the loss before the update.
    pub fn train_step(&mut self, batch: &[&Transition], lr: f64) -> Result<f64> {
        let (loss, grads) = self.loss_and_grad(batch)?;
        self.adam.step(self.mlp.params_mut(), &grads, lr);
        Ok(loss)
    }
}

/// Action distribution over {deselect, select}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyDistribution {
    pub p0: f64,
    pub p1: f64,
}

impl PolicyDistribution {
    pub fn prob(&self, action: u8) -> f64 {
        if action == 1 {
            self.p1
        } else {
            self.p0
        }
    }
}

/// Softmax over the two action values, shifted by the max for stability.
pub fn softmax(q0: f64, q1: f64) -> PolicyDistribution {
    let m = q0.max(q1);
    let e0 = (q0 - m).exp();
    let e1 = (q1 - m).exp();
    let z = e0 + e1;
    PolicyDistribution { p0: e0 / z, p1: e1 / z }
}

/// Greedy action; ties go to action 0 (deselect).
pub fn greedy_action(q0: f64, q1: f64) -> u8 {
    u8::from(q1 > q0)
}

pub fn target_policy(net: &QNetwork, state: &[f64]) -> Result<PolicyDistribution> {
    let (q0, q1) = net.q_values(state)?;
    Ok(softmax(q0, q1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionSample {
    pub action: u8,
    /// Probability with which the sampling policy picks this action.
    pub prob: f64,
}

/// Binary epsilon-greedy draw: the greedy action with probability `1 - eps`,
/// the other one with probability `eps`.
pub fn epsilon_greedy<R: Rng + ?Sized>(q0: f64, q1: f64, epsilon: f64, rng: &mut R) -> ActionSample {
    let greedy = greedy_action(q0, q1);
    if rng.random::<f64>() < 1.0 - epsilon {
        ActionSample { action: greedy, prob: 1.0 - epsilon }
    } else {
        ActionSample { action: 1 - greedy, prob: epsilon }
    }
}

pub fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon must lie strictly inside (0, 1), got {epsilon}")));
    }
    Ok(())
}

pub fn behavior_policy<R: Rng + ?Sized>(net: &QNetwork, state: &[f64], epsilon: f64, rng: &mut R) -> Result<ActionSample> {
    check_epsilon(epsilon)?;
    let (q0, q1) = net.q_values(state)?;
    Ok(epsilon_greedy(q0, q1, epsilon, rng))
}

/// Uniform over both actions, independent of any state.
pub fn random_policy<R: Rng + ?Sized>(rng: &mut R) -> ActionSample {
    ActionSample { action: u8::from(rng.random_bool(0.5)), prob: 0.5 }
}

/// Replay entry: a state, the action taken there and its weighted return.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: u8,
    pub target: f64,
    /// Survival probability `min(1, rho / v)` of the step that produced it.
    pub survival: f64,
}

/// Fixed-capacity FIFO buffer.
#[derive(Debug, Clone)]
pub struct ReplayMemory {
    capacity: usize,
    entries: VecDeque<Transition>,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay memory needs a positive capacity");
        ReplayMemory { capacity, entries: VecDeque::with_capacity(capacity) }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(t);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.entries.iter()
    }

    /// Indices drawn uniformly without replacement (all of them if fewer
    /// than `batch` are stored).
    pub fn sample_indices<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<usize>> {
        if self.entries.is_empty() {
            return Err(Error::EmptyMemory);
        }
        let k = batch.min(self.entries.len());
        Ok(rand::seq::index::sample(rng, self.entries.len(), k).into_vec())
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<&Transition>> {
        Ok(self.sample_indices(batch, rng)?.into_iter().map(|i| &self.entries[i]).collect())
    }
}
