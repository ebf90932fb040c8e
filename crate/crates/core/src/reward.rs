//! Environment reward, advisor utility and potential-based reward shaping.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Split};
use crate::downstream::{evaluate, train_forest, ForestParams, MiTable};
use crate::error::{Error, Result};
use crate::subset::FeatureSubset;

/// Mixture of accuracy, relevance and redundancy in the environment reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub w_acc: f64,
    pub w_rv: f64,
    pub w_rd: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights { w_acc: 1.0, w_rv: 0.1, w_rd: 0.1 }
    }
}

impl RewardWeights {
    pub fn new(w_acc: f64, w_rv: f64, w_rd: f64) -> Result<Self> {
        let w = RewardWeights { w_acc, w_rv, w_rd };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.w_acc, self.w_rv, self.w_rd];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(format!("reward weights must be finite and >= 0, got {all:?}")));
        }
        if all.iter().all(|w| *w == 0.0) {
            return Err(Error::InvalidArgument("reward weights cannot all be zero".into()));
        }
        Ok(())
    }
}

/// Which advisor score is used as the shaping potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UtilityMode {
    /// Relevance only.
    Rv,
    /// Negated redundancy only.
    Rd,
    /// Relevance minus redundancy.
    #[default]
    RvRd,
}

impl UtilityMode {
    pub fn score(self, rv: f64, rd: f64) -> f64 {
        match self {
            UtilityMode::Rv => rv,
            UtilityMode::Rd => -rd,
            UtilityMode::RvRd => rv - rd,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            UtilityMode::Rv => "rv",
            UtilityMode::Rd => "rd",
            UtilityMode::RvRd => "rvrd",
        }
    }
}

impl std::str::FromStr for UtilityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rv" => Ok(UtilityMode::Rv),
            "rd" => Ok(UtilityMode::Rd),
            "rvrd" | "rv-rd" => Ok(UtilityMode::RvRd),
            other => Err(Error::InvalidArgument(format!("unknown utility mode `{other}`"))),
        }
    }
}

/// Mean MI between the selected features and the label (0 for an empty subset).
pub fn relevance(subset: &FeatureSubset, ds: &Dataset) -> f64 {
    if subset.is_empty() {
        return 0.0;
    }
    MiTable::new(&restrict(ds, subset)).relevance(&FeatureSubset::full(subset.len()))
}

/// Mean pairwise MI among the selected features (0 below two features).
pub fn redundancy(subset: &FeatureSubset, ds: &Dataset) -> f64 {
    if subset.len() < 2 {
        return 0.0;
    }
    MiTable::new(&restrict(ds, subset)).redundancy(&FeatureSubset::full(subset.len()))
}

/// Relevance minus redundancy of the subset.
pub fn utility(subset: &FeatureSubset, ds: &Dataset) -> f64 {
    if subset.is_empty() {
        return 0.0;
    }
    let table = MiTable::new(&restrict(ds, subset));
    let all = FeatureSubset::full(subset.len());
    table.relevance(&all) - table.redundancy(&all)
}

fn restrict(ds: &Dataset, subset: &FeatureSubset) -> Dataset {
    let cols = subset.iter().map(|j| ds.column(j).to_vec()).collect();
    let names = subset.iter().map(|j| ds.feature_names()[j].clone()).collect();
    Dataset::with_classes(cols, ds.labels().to_vec(), names, ds.n_classes()).expect("restriction of a valid dataset")
}

/// `w_acc * accuracy + w_rv * relevance - w_rd * redundancy`, with accuracy
/// measured by a forest fit on `split.train` and scored on `split.test`.
/// MI terms are taken on the training fold. The empty subset scores 0.
pub fn eval_reward(subset: &FeatureSubset, split: &Split, weights: &RewardWeights, seed: u64) -> Result<f64> {
    let table = MiTable::new(&split.train);
    eval_reward_with(subset, split, weights, &table, &ForestParams::default(), seed)
}

/// [`eval_reward`] with a precomputed MI table and explicit forest settings.
pub fn eval_reward_with(
    subset: &FeatureSubset,
    split: &Split,
    weights: &RewardWeights,
    table: &MiTable,
    params: &ForestParams,
    seed: u64,
) -> Result<f64> {
    if subset.is_empty() {
        return Ok(0.0);
    }
    let accuracy = if weights.w_acc > 0.0 {
        let model = train_forest(&split.train, subset, params, seed)?;
        evaluate(&model, &split.test, subset)?.accuracy
    } else {
        0.0
    };
    Ok(weights.w_acc * accuracy + weights.w_rv * table.relevance(subset) - weights.w_rd * table.redundancy(subset))
}

/// Potential-based reward advice: `r + c * (gamma * u_next - u_now)`.
pub fn shaped_reward(r: f64, u_now: f64, u_next: f64, gamma: f64, c: f64) -> f64 {
    r + c * (gamma * u_next - u_now)
}
