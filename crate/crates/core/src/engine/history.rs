use serde::{Deserialize, Serialize};

/// How many decisions each feature has received so far.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionHistory {
    counts: Vec<u64>,
}

impl DecisionHistory {
    pub fn new(n_features: usize) -> Self {
        DecisionHistory { counts: vec![0; n_features] }
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        DecisionHistory { counts }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn record(&mut self, features: impl IntoIterator<Item = usize>) {
        for f in features {
            self.counts[f] += 1;
        }
    }

    /// Least-visited features first; ties keep index order.
    pub fn rerank(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.counts.len()).collect();
        order.sort_by_key(|&f| (self.counts[f], f));
        order
    }
}
