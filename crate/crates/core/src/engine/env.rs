//! The feature-selection environment seen by the agent.

use std::collections::HashMap;

use crate::dataset::{split, Dataset, Split};
use crate::downstream::{ForestParams, MiTable};
use crate::error::{Error, Result};
use crate::reward::{eval_reward_with, RewardWeights, UtilityMode};
use crate::state::{StateEncoder, StateRepr, StateVector};
use crate::subset::FeatureSubset;

/// Wraps a training fold: rewards are measured on a nested split of it, so
/// the outer test fold stays untouched during training.
///
/// The fold is min-max scaled first. Forest splits and rank-based MI bins are
/// unchanged by this, but it keeps state vectors on a common scale.
#[derive(Debug, Clone)]
pub struct FeatureEnv {
    data: Dataset,
    inner: Split,
    mi: MiTable,
    encoder: StateEncoder,
    weights: RewardWeights,
    utility_mode: UtilityMode,
    forest: ForestParams,
    forest_seed: u64,
    cache: HashMap<FeatureSubset, f64>,
    forest_fits: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct EnvSettings {
    pub weights: RewardWeights,
    pub utility_mode: UtilityMode,
    pub forest: ForestParams,
    pub state_repr: StateRepr,
    pub inner_ratio: f64,
    pub seed: u64,
}

impl FeatureEnv {
    pub fn new(train: &Dataset, settings: &EnvSettings) -> Result<Self> {
        settings.weights.validate()?;
        if train.n_samples() < 4 {
            return Err(Error::InvalidDataset(format!(
                "training fold has {} rows; at least 4 are needed for a nested split",
                train.n_samples()
            )));
        }
        let data = train.min_max_scaled();
        let inner = split(&data, settings.inner_ratio, settings.seed ^ 0x5eed_1234)?;
        let mi = MiTable::new(&inner.train);
        let encoder = StateEncoder::build(settings.state_repr, &data, settings.seed ^ 0xae)?;
        Ok(FeatureEnv {
            data,
            inner,
            mi,
            encoder,
            weights: settings.weights,
            utility_mode: settings.utility_mode,
            forest: settings.forest,
            forest_seed: settings.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ 0xf0,
            cache: HashMap::new(),
            forest_fits: 0,
        })
    }

    pub fn n_features(&self) -> usize {
        self.data.n_features()
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn inner_split(&self) -> &Split {
        &self.inner
    }

    pub fn state_dim(&self) -> usize {
        self.encoder.dim()
    }

    pub fn encoder(&self) -> &StateEncoder {
        &self.encoder
    }

    pub fn state(&self, subset: &FeatureSubset) -> Result<StateVector> {
        self.encoder.encode(subset)
    }

    /// Environment reward of a subset; memoized.
    pub fn reward(&mut self, subset: &FeatureSubset) -> Result<f64> {
        if let Some(&r) = self.cache.get(subset) {
            return Ok(r);
        }
        let r = eval_reward_with(subset, &self.inner, &self.weights, &self.mi, &self.forest, self.forest_seed)?;
        if !subset.is_empty() && self.weights.w_acc > 0.0 {
            self.forest_fits += 1;
        }
        self.cache.insert(subset.clone(), r);
        Ok(r)
    }

    /// Advisor utility used as the shaping potential.
    pub fn utility(&self, subset: &FeatureSubset) -> f64 {
        self.utility_mode.score(self.mi.relevance(subset), self.mi.redundancy(subset))
    }

    /// Number of distinct forests trained so far.
    pub fn forest_fits(&self) -> usize {
        self.forest_fits
    }
}
