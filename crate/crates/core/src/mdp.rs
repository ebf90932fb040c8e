//! Deterministic tabular MDPs, value iteration, and a checker for the
//! policy invariance of potential-based reward shaping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deterministic MDP; tables are indexed `s * n_actions + a`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    reward: Vec<f64>,
    next_state: Vec<usize>,
    gamma: f64,
}

impl TabularMdp {
    pub fn new(n_states: usize, n_actions: usize, reward: Vec<f64>, next_state: Vec<usize>, gamma: f64) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidArgument("MDP needs at least one state and one action".into()));
        }
        let cells = n_states * n_actions;
        if reward.len() != cells {
            return Err(Error::ShapeMismatch { expected: cells, actual: reward.len() });
        }
        if next_state.len() != cells {
            return Err(Error::ShapeMismatch { expected: cells, actual: next_state.len() });
        }
        if next_state.iter().any(|&s| s >= n_states) {
            return Err(Error::InvalidArgument("transition to a state out of range".into()));
        }
        if reward.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidArgument("rewards must be finite".into()));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidArgument(format!("gamma must lie in [0, 1), got {gamma}")));
        }
        Ok(TabularMdp { n_states, n_actions, reward, next_state, gamma })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.n_actions + a]
    }

    pub fn next_state(&self, s: usize, a: usize) -> usize {
        self.next_state[s * self.n_actions + a]
    }

    /// Same dynamics with `R'(s,a) = R(s,a) + c * (gamma * u(s') - u(s))`.
    pub fn shaped(&self, u: &[f64], c: f64) -> Result<TabularMdp> {
        if u.len() != self.n_states {
            return Err(Error::ShapeMismatch { expected: self.n_states, actual: u.len() });
        }
        let mut reward = self.reward.clone();
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let i = s * self.n_actions + a;
                reward[i] = crate::reward::shaped_reward(reward[i], u[s], u[self.next_state[i]], self.gamma, c);
            }
        }
        TabularMdp::new(self.n_states, self.n_actions, reward, self.next_state.clone(), self.gamma)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.n_actions + a]
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn state_value(&self, s: usize) -> f64 {
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }

    /// Greedy action; ties go to the lowest action index.
    pub fn greedy(&self, s: usize) -> usize {
        let row = self.row(s);
        let mut best = 0;
        for (a, &q) in row.iter().enumerate() {
            if q > row[best] {
                best = a;
            }
        }
        best
    }

    /// Difference between the best and second-best action values.
    pub fn gap(&self, s: usize) -> f64 {
        let mut sorted = self.row(s).to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        if sorted.len() < 2 {
            f64::INFINITY
        } else {
            sorted[0] - sorted[1]
        }
    }

    /// Sup-norm of `T Q - Q` for the Bellman optimality operator `T`.
    pub fn bellman_residual(&self, mdp: &TabularMdp) -> f64 {
        let backed = bellman_backup(mdp, &self.values);
        backed.iter().zip(&self.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

fn bellman_backup(mdp: &TabularMdp, q: &[f64]) -> Vec<f64> {
    let na = mdp.n_actions;
    let v: Vec<f64> =
        (0..mdp.n_states).map(|s| q[s * na..(s + 1) * na].iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
    (0..mdp.n_states * na).map(|i| mdp.reward[i] + mdp.gamma * v[mdp.next_state[i]]).collect()
}

/// Iterates the Bellman optimality operator until the fixed-point residual
/// of the returned table is at most `tol`.
pub fn value_iteration(mdp: &TabularMdp, tol: f64) -> Result<QTable> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let mut q = vec![0.0; mdp.n_states * mdp.n_actions];
    loop {
        let next = bellman_backup(mdp, &q);
        let delta = next.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        q = next;
        // residual(next) <= gamma * delta <= delta
        if delta <= tol {
            break;
        }
    }
    Ok(QTable { n_states: mdp.n_states, n_actions: mdp.n_actions, values: q })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub policies_match: bool,
    pub max_offset_error: f64,
    /// States whose greedy action is unambiguous (gap above 1e-8) in both MDPs.
    pub states_compared: usize,
}

pub const GAP_TOLERANCE: f64 = 1e-8;

/// Solves the original and shaped MDPs and compares them: greedy policies
/// must agree on every state with a clear best action, and the shaped values
/// must equal the original ones shifted by `-c * u(s)`.
pub fn check_invariance(mdp: &TabularMdp, u: &[f64], c: f64, tol: f64) -> Result<InvarianceReport> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("shaping coefficient must be finite and >= 0, got {c}")));
    }
    let shaped = mdp.shaped(u, c)?;
    // Value error is bounded by gamma * residual / (1 - gamma); solve well
    // below the requested tolerance.
    let solve_tol = (tol * (1.0 - mdp.gamma) / 4.0).min(1e-11);
    let base = value_iteration(mdp, solve_tol)?;
    let adv = value_iteration(&shaped, solve_tol)?;

    let mut policies_match = true;
    let mut states_compared = 0;
    let mut max_offset_error: f64 = 0.0;
    for s in 0..mdp.n_states {
        for a in 0..mdp.n_actions {
            let expected = base.get(s, a) - c * u[s];
            max_offset_error = max_offset_error.max((adv.get(s, a) - expected).abs());
        }
        if base.gap(s) > GAP_TOLERANCE && adv.gap(s) > GAP_TOLERANCE {
            states_compared += 1;
            if base.greedy(s) != adv.greedy(s) {
                policies_match = false;
            }
        }
    }
    Ok(InvarianceReport { policies_match, max_offset_error, states_compared })
}
