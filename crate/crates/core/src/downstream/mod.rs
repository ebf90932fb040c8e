//! The downstream task: a random-forest classifier, its metrics, the
//! mutual-information estimator and the K-Best baseline.

pub mod forest;
pub mod metrics;
pub mod mutual_info;

pub use forest::{train_forest, DecisionTree, ForestModel, ForestParams};
pub use metrics::{evaluate, ClassScores, MetricReport};
pub use mutual_info::{discretize, entropy, kbest_select, mutual_information, MiTable};
