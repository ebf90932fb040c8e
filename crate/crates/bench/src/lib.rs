//! Criterion benchmarks for the feature-selection engine live in `benches/`.
