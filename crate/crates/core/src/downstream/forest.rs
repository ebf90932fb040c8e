//! Random forest of CART trees (Gini impurity, bootstrap rows, sqrt feature
//! sampling). Trees are trained from per-tree ChaCha streams so the forest
//! is identical whether trees are built sequentially or in parallel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::subset::FeatureSubset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { n_trees: 100, max_depth: 12, min_samples_leaf: 2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf { histogram: Vec<u32> },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Leaf histogram reached by `row`.
    pub fn leaf_for(&self, ds: &Dataset, row: usize) -> &[u32] {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { histogram } => return histogram,
                Node::Split { feature, threshold, left, right } => {
                    idx = if ds.value(row, *feature) <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn predict_row(&self, ds: &Dataset, row: usize) -> usize {
        argmax_u32(self.leaf_for(ds, row))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    trees: Vec<DecisionTree>,
    subset: FeatureSubset,
    n_classes: usize,
    seed: u64,
}

impl ForestModel {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn subset(&self) -> &FeatureSubset {
        &self.subset
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Majority vote over trees; ties go to the smallest class id.
    pub fn predict_row(&self, ds: &Dataset, row: usize) -> usize {
        let mut votes = vec![0u32; self.n_classes];
        for tree in &self.trees {
            votes[tree.predict_row(ds, row)] += 1;
        }
        argmax_u32(&votes)
    }

    pub fn predict(&self, ds: &Dataset) -> Vec<usize> {
        (0..ds.n_samples()).map(|r| self.predict_row(ds, r)).collect()
    }
}

fn argmax_u32(xs: &[u32]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Trains a forest on the columns in `subset`. A single-class training set
/// yields trees that are a single leaf for that class.
pub fn train_forest(train: &Dataset, subset: &FeatureSubset, params: &ForestParams, seed: u64) -> Result<ForestModel> {
    if subset.is_empty() {
        return Err(Error::InvalidArgument("cannot train a forest on an empty feature subset".into()));
    }
    if let Some(max) = subset.max_index() {
        if max >= train.n_features() {
            return Err(Error::InvalidArgument(format!(
                "feature index {max} out of range for {} features",
                train.n_features()
            )));
        }
    }
    if train.n_samples() == 0 {
        return Err(Error::InvalidDataset("empty training set".into()));
    }
    if params.n_trees == 0 {
        return Err(Error::InvalidArgument("forest needs at least one tree".into()));
    }
    let features = subset.indices();
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            TreeBuilder::new(train, features, params).build(&mut rng)
        })
        .collect();
    Ok(ForestModel { trees, subset: subset.clone(), n_classes: train.n_classes(), seed })
}

struct TreeBuilder<'a> {
    data: &'a Dataset,
    features: &'a [usize],
    params: &'a ForestParams,
    n_classes: usize,
    mtry: usize,
    nodes: Vec<Node>,
    pairs: Vec<(f64, usize)>,
    feat_pool: Vec<usize>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl<'a> TreeBuilder<'a> {
    fn new(data: &'a Dataset, features: &'a [usize], params: &'a ForestParams) -> Self {
        let mtry = ((features.len() as f64).sqrt().floor() as usize).max(1);
        TreeBuilder {
            data,
            features,
            params,
            n_classes: data.n_classes(),
            mtry,
            nodes: Vec::new(),
            pairs: Vec::with_capacity(data.n_samples()),
            feat_pool: features.to_vec(),
        }
    }

    fn build(mut self, rng: &mut ChaCha8Rng) -> DecisionTree {
        let n = self.data.n_samples();
        let mut samples: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        self.grow(&mut samples, 0, rng);
        DecisionTree { nodes: self.nodes }
    }

    fn histogram(&self, samples: &[usize]) -> Vec<u32> {
        let labels = self.data.labels();
        let mut h = vec![0u32; self.n_classes];
        for &s in samples {
            h[labels[s]] += 1;
        }
        h
    }

    /// Grows the subtree for `samples` and returns its node index.
    fn grow(&mut self, samples: &mut [usize], depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let histogram = self.histogram(samples);
        let id = self.nodes.len();
        let pure = histogram.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.params.max_depth || samples.len() < 2 * self.params.min_samples_leaf {
            self.nodes.push(Node::Leaf { histogram });
            return id;
        }
        let Some(best) = self.best_split(samples, &histogram, rng) else {
            self.nodes.push(Node::Leaf { histogram });
            return id;
        };
        let feature = best.feature;
        let threshold = best.threshold;
        let col = self.data.column(feature);
        let mut mid = 0;
        for i in 0..samples.len() {
            if col[samples[i]] <= threshold {
                samples.swap(i, mid);
                mid += 1;
            }
        }
        self.nodes.push(Node::Split { feature, threshold, left: 0, right: 0 });
        let (l, r) = samples.split_at_mut(mid);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        self.nodes[id] = Node::Split { feature, threshold, left, right };
        id
    }

    /// Samples `mtry` candidate features without replacement; if none of them
    /// admits a valid split (all constant in the node) further features are
    /// drawn until one does or the pool is exhausted.
    fn best_split(&mut self, samples: &[usize], parent: &[u32], rng: &mut ChaCha8Rng) -> Option<Candidate> {
        let pool_len = self.feat_pool.len();
        self.feat_pool.copy_from_slice(self.features);
        let mut best: Option<Candidate> = None;
        for drawn in 0..pool_len {
            if drawn >= self.mtry && best.is_some() {
                break;
            }
            let pick = rng.random_range(drawn..pool_len);
            self.feat_pool.swap(drawn, pick);
            let feature = self.feat_pool[drawn];
            if let Some(c) = self.scan_feature(feature, samples, parent) {
                if best.as_ref().is_none_or(|b| c.score > b.score) {
                    best = Some(c);
                }
            }
        }
        best
    }

    /// Best Gini split on one feature. Minimizing weighted child impurity is
    /// the same as maximizing sum(left_c^2)/n_left + sum(right_c^2)/n_right.
    fn scan_feature(&mut self, feature: usize, samples: &[usize], parent: &[u32]) -> Option<Candidate> {
        let col = self.data.column(feature);
        let labels = self.data.labels();
        self.pairs.clear();
        self.pairs.extend(samples.iter().map(|&s| (col[s], labels[s])));
        self.pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let n = self.pairs.len();
        if self.pairs[0].0 == self.pairs[n - 1].0 {
            return None;
        }
        let min_leaf = self.params.min_samples_leaf.max(1);
        let mut left = vec![0u64; self.n_classes];
        let mut right: Vec<u64> = parent.iter().map(|&c| c as u64).collect();
        let mut sq_left = 0u64;
        let mut sq_right: u64 = right.iter().map(|c| c * c).sum();
        let mut best: Option<(f64, usize)> = None;
        for i in 0..n - 1 {
            let c = self.pairs[i].1;
            sq_left += 2 * left[c] + 1;
            sq_right -= 2 * right[c] - 1;
            left[c] += 1;
            right[c] -= 1;
            let n_left = i + 1;
            let n_right = n - n_left;
            if n_left < min_leaf || n_right < min_leaf || self.pairs[i].0 == self.pairs[i + 1].0 {
                continue;
            }
            let score = sq_left as f64 / n_left as f64 + sq_right as f64 / n_right as f64;
            if best.is_none_or(|(s, _)| score > s) {
                best = Some((score, i));
            }
        }
        best.map(|(score, i)| {
            let lo = self.pairs[i].0;
            let hi = self.pairs[i + 1].0;
            let mut threshold = lo + (hi - lo) / 2.0;
            if threshold >= hi {
                threshold = lo;
            }
            Candidate { feature, threshold, score }
        })
    }
}
