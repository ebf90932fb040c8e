//! Plug-in mutual information on discretized columns.

use std::collections::HashMap;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::subset::FeatureSubset;

pub const DEFAULT_BINS: usize = 10;
/// Integer-valued columns with at most this many distinct values are used as-is.
pub const MAX_INTEGER_LEVELS: usize = 32;

/// Maps a continuous column to small integer codes. Integer-valued columns
/// with few levels keep their levels; everything else gets equal-frequency
/// bins (tied values always share a bin).
pub fn discretize(values: &[f64], bins: usize) -> Vec<u32> {
    if values.is_empty() {
        return Vec::new();
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);

    if values.iter().all(|v| v.fract() == 0.0) {
        let mut levels = sorted.clone();
        levels.dedup();
        if levels.len() <= MAX_INTEGER_LEVELS {
            return values.iter().map(|v| levels.partition_point(|l| l < v) as u32).collect();
        }
    }

    let n = sorted.len();
    let bins = bins.max(1);
    let mut cuts: Vec<f64> = (1..bins).map(|b| sorted[(n * b) / bins]).collect();
    cuts.dedup();
    values.iter().map(|v| cuts.partition_point(|c| c <= v) as u32).collect()
}

fn densify(codes: &[u32]) -> (Vec<usize>, usize) {
    let mut map: HashMap<u32, usize> = HashMap::new();
    let dense = codes
        .iter()
        .map(|c| {
            let next = map.len();
            *map.entry(*c).or_insert(next)
        })
        .collect();
    (dense, map.len())
}

/// Empirical entropy in nats.
pub fn entropy(x: &[u32]) -> f64 {
    let (dx, kx) = densify(x);
    let mut counts = vec![0usize; kx];
    for &a in &dx {
        counts[a] += 1;
    }
    let n = x.len() as f64;
    -counts.iter().filter(|&&c| c > 0).map(|&c| (c as f64 / n) * (c as f64 / n).ln()).sum::<f64>()
}

/// Mutual information (nats) from the empirical joint histogram.
pub fn mutual_information(x: &[u32], y: &[u32]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch { expected: x.len(), actual: y.len() });
    }
    if x.is_empty() {
        return Err(Error::InvalidArgument("mutual information of empty sequences".into()));
    }
    let (dx, kx) = densify(x);
    let (dy, ky) = densify(y);
    let mut joint = vec![0usize; kx * ky];
    let mut px = vec![0usize; kx];
    let mut py = vec![0usize; ky];
    for (&a, &b) in dx.iter().zip(&dy) {
        joint[a * ky + b] += 1;
        px[a] += 1;
        py[b] += 1;
    }
    let n = x.len() as f64;
    let mut mi = 0.0;
    for a in 0..kx {
        for b in 0..ky {
            let c = joint[a * ky + b];
            if c > 0 {
                // log(p_ab / (p_a p_b)) = log(c n / (n_a n_b))
                mi += (c as f64 / n) * ((c as f64 * n) / (px[a] as f64 * py[b] as f64)).ln();
            }
        }
    }
    Ok(mi.max(0.0))
}

fn label_codes(ds: &Dataset) -> Vec<u32> {
    ds.labels().iter().map(|&l| l as u32).collect()
}

/// Discretized copy of every column of `ds`.
pub fn discretize_all(ds: &Dataset) -> Vec<Vec<u32>> {
    ds.columns().iter().map(|c| discretize(c, DEFAULT_BINS)).collect()
}

/// MI of every feature with the label.
pub fn feature_label_mi(ds: &Dataset) -> Vec<f64> {
    let y = label_codes(ds);
    discretize_all(ds).iter().map(|x| mutual_information(x, &y).expect("equal lengths")).collect()
}

/// The `k` features with the largest MI with the label, ties to smaller index.
pub fn kbest_select(ds: &Dataset, k: usize) -> Result<FeatureSubset> {
    if k == 0 || k > ds.n_features() {
        return Err(Error::InvalidArgument(format!("k must lie in 1..={}, got {k}", ds.n_features())));
    }
    let scores = feature_label_mi(ds);
    let mut order: Vec<usize> = (0..ds.n_features()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ok(order.into_iter().take(k).collect())
}

/// Default K-Best size: half the features, at least one.
pub fn default_k(n_features: usize) -> usize {
    (n_features / 2).max(1)
}

/// Precomputed relevance and pairwise redundancy terms for one dataset.
#[derive(Debug, Clone)]
pub struct MiTable {
    relevance: Vec<f64>,
    pairwise: Vec<f64>,
    n: usize,
}

impl MiTable {
    pub fn new(ds: &Dataset) -> Self {
        let codes = discretize_all(ds);
        let y = label_codes(ds);
        let n = ds.n_features();
        let relevance = codes.iter().map(|x| mutual_information(x, &y).expect("equal lengths")).collect();
        let mut pairwise = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = mutual_information(&codes[i], &codes[j]).expect("equal lengths");
                pairwise[i * n + j] = v;
                pairwise[j * n + i] = v;
            }
        }
        MiTable { relevance, pairwise, n }
    }

    pub fn feature_relevance(&self, f: usize) -> f64 {
        self.relevance[f]
    }

    pub fn pair(&self, i: usize, j: usize) -> f64 {
        self.pairwise[i * self.n + j]
    }

    /// Mean MI between the selected features and the label; 0 when empty.
    pub fn relevance(&self, subset: &FeatureSubset) -> f64 {
        if subset.is_empty() {
            return 0.0;
        }
        subset.iter().map(|f| self.relevance[f]).sum::<f64>() / subset.len() as f64
    }

    /// Mean MI over unordered pairs of selected features; 0 below two features.
    pub fn redundancy(&self, subset: &FeatureSubset) -> f64 {
        let idx = subset.indices();
        if idx.len() < 2 {
            return 0.0;
        }
        let mut sum = 0.0;
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                sum += self.pair(i, j);
            }
        }
        let pairs = idx.len() * (idx.len() - 1) / 2;
        sum / pairs as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synth_classification;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mi_of_copy_is_ln2() {
        let x: Vec<u32> = (0..1000).map(|i| (i % 2) as u32).collect();
        let mi = mutual_information(&x, &x).unwrap();
        assert!((mi - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn independent_coins_have_small_mi() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<u32> = (0..100_000).map(|_| rng.random_range(0..2)).collect();
        let y: Vec<u32> = (0..100_000).map(|_| rng.random_range(0..2)).collect();
        assert!(mutual_information(&x, &y).unwrap() < 0.01);
    }

    #[test]
    fn constant_column_has_zero_mi() {
        let x = vec![7u32; 50];
        let y: Vec<u32> = (0..50).map(|i| (i % 5) as u32).collect();
        assert_eq!(mutual_information(&x, &y).unwrap(), 0.0);
    }

    #[test]
    fn length_mismatch_errors() {
        assert!(mutual_information(&[0, 1], &[0]).is_err());
    }

    #[test]
    fn symmetry_and_self_information() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x: Vec<u32> = (0..300).map(|_| rng.random_range(0..6)).collect();
            let y: Vec<u32> = x.iter().map(|v| (v + rng.random_range(0..3)) % 4).collect();
            let a = mutual_information(&x, &y).unwrap();
            let b = mutual_information(&y, &x).unwrap();
            assert!((a - b).abs() < 1e-12);
            assert!((mutual_information(&x, &x).unwrap() - entropy(&x)).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_frequency_bins() {
        let v: Vec<f64> = (0..100).map(|i| i as f64 + 0.5).collect();
        let codes = discretize(&v, 10);
        for b in 0..10u32 {
            assert_eq!(codes.iter().filter(|&&c| c == b).count(), 10);
        }
        // small integer columns keep their levels
        let ints = [3.0, 1.0, 3.0, 2.0];
        assert_eq!(discretize(&ints, 10), vec![2, 0, 2, 1]);
    }

    #[test]
    fn kbest_recovers_informative_features() {
        for seed in 0..3 {
            let s = synth_classification(500, 20, 5, seed).unwrap();
            assert_eq!(kbest_select(&s.dataset, 5).unwrap(), s.informative, "seed {seed}");
        }
    }

    #[test]
    fn kbest_bounds() {
        let s = synth_classification(50, 6, 2, 0).unwrap();
        assert_eq!(kbest_select(&s.dataset, 6).unwrap(), FeatureSubset::full(6));
        assert!(kbest_select(&s.dataset, 0).is_err());
        assert!(kbest_select(&s.dataset, 7).is_err());
        assert_eq!(default_k(57), 28);
    }
}
