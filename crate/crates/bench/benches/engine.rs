use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use mcfs_core::downstream::MiTable;
use mcfs_core::engine::{TrainConfig, Trainer};
use mcfs_core::qlearner::{QNetwork, ReplayMemory, Transition};
use mcfs_core::state::MetaStats;
use mcfs_core::{split, synth_classification, train_forest, FeatureSubset, ForestParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn forest(c: &mut Criterion) {
    let data = synth_classification(500, 20, 5, 0).unwrap();
    let sp = split(&data.dataset, 0.8, 0).unwrap();
    let half: FeatureSubset = (0..10).collect();
    c.bench_function("forest_100_trees_400x10", |b| {
        b.iter(|| train_forest(&sp.train, black_box(&half), &ForestParams::default(), 1).unwrap())
    });
}

fn representations(c: &mut Criterion) {
    let data = synth_classification(500, 20, 5, 0).unwrap();
    let meta = MetaStats::new(&data.dataset);
    let subset: FeatureSubset = (0..20).step_by(2).collect();
    c.bench_function("meta_state_10_of_20", |b| b.iter(|| meta.encode(black_box(&subset))));
    c.bench_function("mi_table_500x20", |b| b.iter(|| MiTable::new(black_box(&data.dataset))));
}

fn q_updates(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut memory = ReplayMemory::new(200);
    for i in 0..200 {
        memory.push(Transition { state: vec![(i % 7) as f64 / 7.0; 49], action: (i % 2) as u8, target: 1.0, survival: 1.0 });
    }
    let net = QNetwork::new(49, &mut rng);
    c.bench_function("q_train_step_batch16", |b| {
        b.iter_batched(
            || net.clone(),
            |mut n| {
                let batch = memory.sample(16, &mut rng).unwrap();
                n.train_step(&batch, 0.01).unwrap()
            },
            BatchSize::SmallInput,
        )
    });
}

fn episodes(c: &mut Criterion) {
    let data = synth_classification(300, 12, 4, 0).unwrap();
    let sp = split(&data.dataset, 0.8, 0).unwrap();
    let cfg = TrainConfig { forest: ForestParams { n_trees: 20, ..ForestParams::default() }, ..TrainConfig::default() };
    let mut group = c.benchmark_group("training");
    group.sample_size(10);
    group.bench_function("20_episodes_300x12", |b| {
        b.iter(|| {
            let mut t = Trainer::new(&sp, &cfg).unwrap();
            for _ in 0..20 {
                t.run_episode().unwrap();
            }
            t.finish().unwrap().best_eval
        })
    });
    group.finish();
}

criterion_group!(benches, forest, representations, q_updates, episodes);
criterion_main!(benches);
