//! Dataset ingestion, stratified splitting and a synthetic generator with
//! known informative columns.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::subset::FeatureSubset;

/// Numeric feature matrix (column-major) with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Vec<f64>>,
    labels: Vec<usize>,
    n_classes: usize,
    feature_names: Vec<String>,
    class_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from columns; `n_classes` is one past the largest label.
    pub fn new(columns: Vec<Vec<f64>>, labels: Vec<usize>, feature_names: Vec<String>) -> Result<Self> {
        let n_classes = labels.iter().max().map_or(0, |m| m + 1).max(2);
        Self::with_classes(columns, labels, feature_names, n_classes)
    }

    pub fn with_classes(
        columns: Vec<Vec<f64>>,
        labels: Vec<usize>,
        feature_names: Vec<String>,
        n_classes: usize,
    ) -> Result<Self> {
        let class_names = (0..n_classes).map(|c| c.to_string()).collect();
        Self::from_parts(columns, labels, feature_names, class_names)
    }

    fn from_parts(
        columns: Vec<Vec<f64>>,
        labels: Vec<usize>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let n_classes = class_names.len();
        if n_classes < 2 {
            return Err(Error::InvalidDataset(format!("need at least 2 classes, got {n_classes}")));
        }
        if columns.len() != feature_names.len() {
            return Err(Error::InvalidDataset(format!(
                "{} columns but {} feature names",
                columns.len(),
                feature_names.len()
            )));
        }
        for (j, col) in columns.iter().enumerate() {
            if col.len() != labels.len() {
                return Err(Error::InvalidDataset(format!(
                    "column `{}` has {} rows, labels have {}",
                    feature_names[j],
                    col.len(),
                    labels.len()
                )));
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!(
                    "non-finite value in column `{}` at row {i}",
                    feature_names[j]
                )));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::InvalidDataset(format!("label {bad} out of range for {n_classes} classes")));
        }
        Ok(Dataset { columns, labels, n_classes, feature_names, class_names })
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.columns[feature][row]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Rows in the given order; class vocabulary is preserved.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            columns: self.columns.iter().map(|c| rows.iter().map(|&r| c[r]).collect()).collect(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            n_classes: self.n_classes,
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
        }
    }

    /// Rescales every column to [0, 1] using its own min and max. Constant
    /// columns become all zeros. Order within each column is preserved, so
    /// tree splits and rank-based discretization are unaffected.
    pub fn min_max_scaled(&self) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|col| {
                let (lo, hi) = col
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
                let range = hi - lo;
                if range > 0.0 {
                    col.iter().map(|&v| (v - lo) / range).collect()
                } else {
                    vec![0.0; col.len()]
                }
            })
            .collect();
        Dataset { columns, ..self.clone() }
    }

    /// Index of the most frequent class (smallest id on ties).
    pub fn majority_class(&self) -> usize {
        let counts = self.class_counts();
        let mut best = 0;
        for (c, &n) in counts.iter().enumerate() {
            if n > counts[best] {
                best = c;
            }
        }
        best
    }

    pub fn subset_names(&self, subset: &FeatureSubset) -> Vec<String> {
        subset.iter().map(|j| self.feature_names[j].clone()).collect()
    }
}

/// Loads a CSV with a header row. Every column except `label_col` must be
/// numeric; labels are factorized in first-appearance order.
pub fn load_csv(path: impl AsRef<Path>, label_col: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };

    let headers: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(|h| h.trim().to_string()).collect();
    let label_idx = headers
        .iter()
        .position(|h| h == label_col)
        .ok_or_else(|| Error::MissingLabelColumn(label_col.to_string()))?;

    let feature_names: Vec<String> =
        headers.iter().enumerate().filter(|(i, _)| *i != label_idx).map(|(_, h)| h.clone()).collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); feature_names.len()];
    let mut labels = Vec::new();
    let mut class_index: HashMap<String, usize> = HashMap::new();
    let mut class_names = Vec::new();

    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let mut j = 0;
        for (i, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if cell.is_empty() {
                return Err(Error::MissingValue { line, column: headers[i].clone() });
            }
            if i == label_idx {
                let next = class_index.len();
                let id = *class_index.entry(cell.to_string()).or_insert_with(|| {
                    class_names.push(cell.to_string());
                    next
                });
                labels.push(id);
            } else {
                let v: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                    line,
                    column: headers[i].clone(),
                    value: cell.to_string(),
                })?;
                if !v.is_finite() {
                    return Err(Error::NonNumeric { line, column: headers[i].clone(), value: cell.to_string() });
                }
                columns[j].push(v);
                j += 1;
            }
        }
    }

    if labels.is_empty() {
        return Err(Error::InvalidDataset(format!("{} has no data rows", path.display())));
    }
    if class_names.len() < 2 {
        return Err(Error::InvalidDataset(format!("label column `{label_col}` has a single class")));
    }
    Dataset::from_parts(columns, labels, feature_names, class_names)
}

/// Writes the dataset back out; `load_csv` on the result reproduces it exactly
/// because `f64` display is round-trip precise.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>, label_col: &str) -> Result<()> {
    let path = path.as_ref();
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header: Vec<&str> = ds.feature_names.iter().map(String::as_str).collect();
    header.push(label_col);
    writer.write_record(&header).map_err(csv_err)?;
    for row in 0..ds.n_samples() {
        let mut rec: Vec<String> = ds.columns.iter().map(|c| c[row].to_string()).collect();
        rec.push(ds.class_names[ds.labels[row]].clone());
        writer.write_record(&rec).map_err(csv_err)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// A disjoint train/test partition of a source dataset.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    pub ratio: f64,
    pub seed: u64,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

/// Deterministic train/test split. Stratified by class whenever every class
/// present has at least two samples.
pub fn split(ds: &Dataset, ratio: f64, seed: u64) -> Result<Split> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!("split ratio must lie in (0, 1), got {ratio}")));
    }
    let n = ds.n_samples();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("cannot split a dataset with {n} sample(s)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_train = ((ratio * n as f64).round() as usize).clamp(1, n - 1);

    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.n_classes()];
    for (i, &l) in ds.labels().iter().enumerate() {
        by_class[l].push(i);
    }
    let stratify = by_class.iter().all(|rows| rows.is_empty() || rows.len() >= 2);

    let mut train_rows = Vec::with_capacity(n_train);
    let mut test_rows = Vec::with_capacity(n - n_train);
    if stratify {
        // Largest-remainder allocation keeps every class within one row of
        // its proportional share while hitting the exact train size.
        let quotas: Vec<f64> = by_class.iter().map(|rows| rows.len() as f64 * n_train as f64 / n as f64).collect();
        let mut alloc: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
        let mut remaining = n_train - alloc.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..by_class.len()).collect();
        order.sort_by(|&a, &b| {
            let fa = quotas[a] - quotas[a].floor();
            let fb = quotas[b] - quotas[b].floor();
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        for c in order {
            if remaining == 0 {
                break;
            }
            if alloc[c] < by_class[c].len() {
                alloc[c] += 1;
                remaining -= 1;
            }
        }
        for (c, rows) in by_class.iter_mut().enumerate() {
            rows.shuffle(&mut rng);
            train_rows.extend_from_slice(&rows[..alloc[c]]);
            test_rows.extend_from_slice(&rows[alloc[c]..]);
        }
    } else {
        let mut rows: Vec<usize> = (0..n).collect();
        rows.shuffle(&mut rng);
        train_rows.extend_from_slice(&rows[..n_train]);
        test_rows.extend_from_slice(&rows[n_train..]);
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();

    Ok(Split {
        train: ds.select_rows(&train_rows),
        test: ds.select_rows(&test_rows),
        ratio,
        seed,
        train_rows,
        test_rows,
    })
}

/// Knobs for [`synth_classification_with`].
#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    pub n_samples: usize,
    pub n_features: usize,
    pub n_informative: usize,
    pub n_classes: usize,
    /// Standard deviation of the Gaussian noise added to each class score.
    pub noise_std: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(n_samples: usize, n_features: usize, n_informative: usize, seed: u64) -> Self {
        SynthConfig { n_samples, n_features, n_informative, n_classes: 2, noise_std: 0.5, seed }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub dataset: Dataset,
    pub informative: FeatureSubset,
    /// Class score weights over the informative columns, one row per class.
    pub weights: Vec<Vec<f64>>,
}

/// Synthetic classification data: standard normal columns, labels are the
/// argmax of a random linear score over the informative columns plus noise.
pub fn synth_classification(n: usize, d: usize, k_informative: usize, seed: u64) -> Result<SyntheticData> {
    synth_classification_with(SynthConfig::new(n, d, k_informative, seed))
}

pub fn synth_classification_with(cfg: SynthConfig) -> Result<SyntheticData> {
    let SynthConfig { n_samples, n_features, n_informative, n_classes, noise_std, seed } = cfg;
    if n_informative == 0 || n_informative > n_features {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= k_informative <= d, got k={n_informative}, d={n_features}"
        )));
    }
    if n_classes < 2 || n_samples == 0 {
        return Err(Error::InvalidArgument("need n >= 1 and at least 2 classes".into()));
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise_std must be finite and >= 0, got {noise_std}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");

    let mut positions: Vec<usize> = (0..n_features).collect();
    positions.shuffle(&mut rng);
    let informative: FeatureSubset = positions[..n_informative].iter().copied().collect();

    // Class 0 is the reference score; every other class contrasts with it on
    // every informative column with weight magnitude in [0.5, 1.5].
    let mut weights = vec![vec![0.0; n_informative]; n_classes];
    for row in weights.iter_mut().skip(1) {
        for w in row.iter_mut() {
            let mag = rng.random_range(0.5..1.5);
            *w = if rng.random_bool(0.5) { mag } else { -mag };
        }
    }

    let columns: Vec<Vec<f64>> =
        (0..n_features).map(|_| (0..n_samples).map(|_| std_normal.sample(&mut rng)).collect()).collect();
    let inf_idx: Vec<usize> = informative.indices().to_vec();
    let mut labels = Vec::with_capacity(n_samples);
    for row in 0..n_samples {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (c, w) in weights.iter().enumerate() {
            let mut score: f64 = w.iter().zip(&inf_idx).map(|(wi, &j)| wi * columns[j][row]).sum();
            if noise_std > 0.0 {
                score += noise_std * std_normal.sample(&mut rng);
            }
            if score > best_score {
                best_score = score;
                best = c;
            }
        }
        labels.push(best);
    }
    let names = (0..n_features).map(|j| format!("x{j}")).collect();
    let dataset = Dataset::with_classes(columns, labels, names, n_classes)?;
    Ok(SyntheticData { dataset, informative, weights })
}
