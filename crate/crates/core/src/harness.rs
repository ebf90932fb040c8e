//! Experiment orchestration: single runs with baselines, seed sweeps and
//! the JSON / CSV artifacts they produce.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{split, Dataset, Split};
use crate::downstream::mutual_info::default_k;
use crate::downstream::{evaluate, kbest_select, train_forest, ForestParams, MetricReport};
use crate::engine::{train, BehaviorMode, EpisodeRecord, TrainConfig};
use crate::error::{Error, Result};
use crate::reward::UtilityMode;
use crate::subset::FeatureSubset;

pub const SCHEMA_VERSION: u32 = 1;
pub const CURVES_HEADER: [&str; 5] = ["episode", "eval", "length", "loss", "wall_ms"];

/// JSON schema every [`RunReport`] validates against.
pub const RUN_REPORT_SCHEMA: &str = include_str!("../schema/run_report.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub source: String,
    pub n_samples: usize,
    pub n_features: usize,
    pub n_classes: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub split_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetReport {
    pub indices: Vec<usize>,
    pub names: Vec<String>,
}

impl SubsetReport {
    fn new(subset: &FeatureSubset, ds: &Dataset) -> Self {
        SubsetReport { indices: subset.indices().to_vec(), names: ds.subset_names(subset) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub seed: u64,
    pub config: TrainConfig,
    pub dataset: DatasetInfo,
    pub best_subset: SubsetReport,
    pub best_eval: f64,
    pub greedy_subset: SubsetReport,
    pub greedy_eval: f64,
    /// Held-out metrics of `best_subset`.
    pub test_metrics: MetricReport,
    pub baselines: BTreeMap<String, MetricReport>,
    pub curves: Vec<EpisodeRecord>,
    pub episodes_completed: usize,
    pub global_steps: usize,
    pub forest_fits: usize,
    pub decision_counts: Vec<u64>,
    pub train_wall_ms: f64,
    pub total_wall_ms: f64,
}

impl RunReport {
    pub fn mean_episode_length(&self) -> f64 {
        if self.curves.is_empty() {
            return 0.0;
        }
        self.curves.iter().map(|c| c.length as f64).sum::<f64>() / self.curves.len() as f64
    }

    /// Writes `report.json` and `curves.csv` into `dir`, creating it.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json_path = dir.join("report.json");
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;
        write_curves(&self.curves, &dir.join("curves.csv"))
    }
}

pub fn write_curves(curves: &[EpisodeRecord], path: &Path) -> Result<()> {
    let csv_err = |e| Error::Csv { path: path.to_path_buf(), source: e };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(CURVES_HEADER).map_err(csv_err)?;
    for c in curves {
        w.write_record([
            c.episode.to_string(),
            c.eval.to_string(),
            c.length.to_string(),
            c.loss.to_string(),
            format!("{:.3}", c.wall_ms),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Held-out metrics of a forest trained on `subset`. The empty subset is
/// scored as a majority-class predictor.
pub fn subset_metrics(split: &Split, subset: &FeatureSubset, params: &ForestParams, seed: u64) -> Result<MetricReport> {
    if subset.is_empty() {
        let majority = split.train.majority_class();
        let predicted = vec![majority; split.test.n_samples()];
        return Ok(MetricReport::from_predictions(split.test.labels(), &predicted, split.test.n_classes()));
    }
    let model = train_forest(&split.train, subset, params, seed)?;
    evaluate(&model, &split.test, subset)
}

/// Baselines scored with the same forest settings and seed: every feature,
/// the `k` best by mutual information, `k` random features, and `selected`.
/// `k` is half the feature count.
pub fn compare_baselines(
    split: &Split,
    config: &TrainConfig,
    selected: &FeatureSubset,
) -> Result<BTreeMap<String, MetricReport>> {
    let n = split.train.n_features();
    let k = default_k(n);
    let seed = report_forest_seed(config.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x0a4d_0b5e);
    let random: FeatureSubset = rand::seq::index::sample(&mut rng, n, k).into_iter().collect();
    let mut out = BTreeMap::new();
    out.insert("all_features".to_string(), subset_metrics(split, &FeatureSubset::full(n), &config.forest, seed)?);
    out.insert("kbest".to_string(), subset_metrics(split, &kbest_select(&split.train, k)?, &config.forest, seed)?);
    out.insert("random".to_string(), subset_metrics(split, &random, &config.forest, seed)?);
    out.insert("selected".to_string(), subset_metrics(split, selected, &config.forest, seed)?);
    Ok(out)
}

fn report_forest_seed(seed: u64) -> u64 {
    seed ^ 0x7e57_f0e5
}

/// Splits `ds` with `config.seed`, trains, and scores everything on the
/// held-out fold.
pub fn run_experiment(ds: &Dataset, source: &str, split_ratio: f64, config: &TrainConfig) -> Result<RunReport> {
    let start = Instant::now();
    let sp = split(ds, split_ratio, config.seed)?;
    let t_train = Instant::now();
    let outcome = train(&sp, config)?;
    let train_wall_ms = t_train.elapsed().as_secs_f64() * 1e3;
    let baselines = compare_baselines(&sp, config, &outcome.best_subset)?;
    let test_metrics = baselines["selected"].clone();
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        seed: config.seed,
        config: config.clone(),
        dataset: DatasetInfo {
            source: source.to_string(),
            n_samples: ds.n_samples(),
            n_features: ds.n_features(),
            n_classes: ds.n_classes(),
            n_train: sp.train.n_samples(),
            n_test: sp.test.n_samples(),
            split_ratio,
        },
        best_subset: SubsetReport::new(&outcome.best_subset, ds),
        best_eval: outcome.best_eval,
        greedy_subset: SubsetReport::new(&outcome.greedy_subset, ds),
        greedy_eval: outcome.greedy_eval,
        test_metrics,
        baselines,
        episodes_completed: outcome.curves.len(),
        curves: outcome.curves,
        global_steps: outcome.global_steps,
        forest_fits: outcome.forest_fits,
        decision_counts: outcome.decision_counts,
        train_wall_ms,
        total_wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Configuration knob varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    StopThreshold,
    Behavior,
    AdviseSteps,
    UtilityMode,
    DecisionHistory,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::StopThreshold => "stop-threshold",
            SweepParam::Behavior => "behavior",
            SweepParam::AdviseSteps => "advise-steps",
            SweepParam::UtilityMode => "utility-mode",
            SweepParam::DecisionHistory => "decision-history",
        }
    }

    /// `base` with this parameter set to `value`.
    pub fn apply(self, base: &TrainConfig, value: &str) -> Result<TrainConfig> {
        let bad = || Error::InvalidArgument(format!("invalid value `{value}` for {}", self.as_str()));
        let mut cfg = base.clone();
        match self {
            SweepParam::StopThreshold => cfg.stop_threshold = value.parse().map_err(|_| bad())?,
            SweepParam::Behavior => cfg.behavior = value.parse::<BehaviorMode>()?,
            SweepParam::AdviseSteps => cfg.advise_steps = value.parse().map_err(|_| bad())?,
            SweepParam::UtilityMode => cfg.utility = value.parse::<UtilityMode>()?,
            SweepParam::DecisionHistory => cfg.decision_history = value.parse().map_err(|_| bad())?,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stop-threshold" | "v" => Ok(SweepParam::StopThreshold),
            "behavior" => Ok(SweepParam::Behavior),
            "advise-steps" => Ok(SweepParam::AdviseSteps),
            "utility-mode" | "utility" => Ok(SweepParam::UtilityMode),
            "decision-history" => Ok(SweepParam::DecisionHistory),
            other => Err(Error::InvalidArgument(format!("unknown sweep parameter `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub value: String,
    pub seed: u64,
    pub report: RunReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub param: SweepParam,
    pub values: Vec<String>,
    pub seeds: Vec<u64>,
    pub runs: Vec<SweepRun>,
}

pub const SUMMARY_HEADER: [&str; 11] = [
    "param",
    "value",
    "seed",
    "best_eval",
    "test_accuracy",
    "test_f1_macro",
    "greedy_eval",
    "mean_length",
    "episodes",
    "n_selected",
    "train_wall_ms",
];

impl SweepReport {
    /// Runs for one value, in seed order.
    pub fn runs_for<'a>(&'a self, value: &'a str) -> impl Iterator<Item = &'a RunReport> + 'a {
        self.runs.iter().filter(move |r| r.value == value).map(|r| &r.report)
    }

    /// Directory of one run below the sweep output directory.
    pub fn run_dir(&self, out: &Path, run: &SweepRun) -> PathBuf {
        out.join(format!("{}-{}-seed{}", self.param.as_str(), run.value, run.seed))
    }

    /// Writes one report directory per run and `summary.csv`.
    pub fn write(&self, out: &Path) -> Result<()> {
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        for run in &self.runs {
            run.report.write(&self.run_dir(out, run))?;
        }
        let path = out.join("summary.csv");
        let csv_err = |e| Error::Csv { path: path.clone(), source: e };
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        w.write_record(SUMMARY_HEADER).map_err(csv_err)?;
        for run in &self.runs {
            let r = &run.report;
            w.write_record([
                self.param.as_str().to_string(),
                run.value.clone(),
                run.seed.to_string(),
                r.best_eval.to_string(),
                r.test_metrics.accuracy.to_string(),
                r.test_metrics.f1_macro.to_string(),
                r.greedy_eval.to_string(),
                r.mean_episode_length().to_string(),
                r.episodes_completed.to_string(),
                r.best_subset.indices.len().to_string(),
                format!("{:.3}", r.train_wall_ms),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))
    }
}

/// One independent run per (value, seed) pair, in parallel on the current
/// rayon pool. Results come back in value-major, seed-minor order.
pub fn sweep(
    ds: &Dataset,
    source: &str,
    split_ratio: f64,
    base: &TrainConfig,
    param: SweepParam,
    values: &[String],
    seeds: &[u64],
) -> Result<SweepReport> {
    if values.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidArgument("a sweep needs at least one value and one seed".into()));
    }
    let mut jobs = Vec::with_capacity(values.len() * seeds.len());
    for value in values {
        for &seed in seeds {
            let mut cfg = param.apply(base, value)?;
            cfg.seed = seed;
            jobs.push((value.clone(), seed, cfg));
        }
    }
    let runs = jobs
        .into_par_iter()
        .map(|(value, seed, cfg)| {
            run_experiment(ds, source, split_ratio, &cfg).map(|report| SweepRun { value, seed, report })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport { param, values: values.to_vec(), seeds: seeds.to_vec(), runs })
}

/// Median of a non-empty sample (mean of the middle pair for even sizes).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty sample");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}
