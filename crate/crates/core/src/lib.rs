//! Single-agent Monte Carlo reinforced feature selection.
//!
//! One agent walks the feature set in a (history re-ranked) order and emits a
//! select/deselect decision per feature. Episodes come from an epsilon-greedy
//! behavior policy and are corrected towards a softmax target policy with
//! incrementally computed importance weights. Low-weight traversals are cut
//! short by rejection control, and an advisor utility (relevance minus
//! redundancy) shapes the reward during an early advising window.
//!
//! The crate also ships the oracles the engine is checked against: a tabular
//! value-iteration solver for reward-shaping invariance, a discretized
//! mutual-information estimator and a from-scratch random forest used as the
//! downstream task.

pub mod dataset;
pub mod downstream;
pub mod engine;
pub mod error;
pub mod harness;
pub mod mdp;
pub mod nn;
pub mod qlearner;
pub mod reward;
pub mod state;
pub mod subset;

pub use dataset::{load_csv, split, synth_classification, write_csv, Dataset, Split, SynthConfig, SyntheticData};
pub use downstream::{
    evaluate, kbest_select, mutual_information, train_forest, ForestModel, ForestParams, MetricReport,
};
pub use engine::{train, BehaviorMode, Episode, EpisodeStep, RecalcMode, ReturnMode, TrainConfig, TrainOutcome, Trainer};
pub use error::{Error, Result};
pub use harness::{compare_baselines, run_experiment, sweep, RunReport, SweepParam, SweepReport};

pub use mdp::{check_invariance, value_iteration, InvarianceReport, QTable, TabularMdp};
pub use qlearner::{PolicyDistribution, QNetwork, ReplayMemory, Transition};
pub use reward::{eval_reward, redundancy, relevance, shaped_reward, utility, RewardWeights, UtilityMode};
pub use state::{meta_stats, Autoencoder, StateRepr, StateVector};
pub use subset::FeatureSubset;
