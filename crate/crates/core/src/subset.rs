use std::fmt;

use serde::{Deserialize, Serialize};

/// A set of selected feature indices, kept sorted and free of duplicates.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureSubset(Vec<usize>);

impl FeatureSubset {
    pub fn empty() -> Self {
        FeatureSubset(Vec::new())
    }

    pub fn full(n_features: usize) -> Self {
        FeatureSubset((0..n_features).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, feature: usize) -> bool {
        self.0.binary_search(&feature).is_ok()
    }

    /// Returns `true` if the feature was not already present.
    pub fn insert(&mut self, feature: usize) -> bool {
        match self.0.binary_search(&feature) {
            Ok(_) => false,
            Err(pos) => {
                self.0.insert(pos, feature);
                true
            }
        }
    }

    pub fn max_index(&self) -> Option<usize> {
        self.0.last().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn intersection_len(&self, other: &FeatureSubset) -> usize {
        self.0.iter().filter(|f| other.contains(**f)).count()
    }
}

impl FromIterator<usize> for FeatureSubset {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut v: Vec<usize> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        FeatureSubset(v)
    }
}

impl From<Vec<usize>> for FeatureSubset {
    fn from(v: Vec<usize>) -> Self {
        v.into_iter().collect()
    }
}

impl<const N: usize> From<[usize; N]> for FeatureSubset {
    fn from(v: [usize; N]) -> Self {
        v.into_iter().collect()
    }
}

impl fmt::Display for FeatureSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, idx) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{idx}")?;
        }
        write!(f, "}}")
    }
}
