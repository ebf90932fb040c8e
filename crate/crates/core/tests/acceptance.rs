//! Acceptance suite: one PASS/FAIL/SKIP line per criterion. Exits non-zero
//! when any criterion fails.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use mcfs_core::dataset::split;
use mcfs_core::engine::{
    incremental_weight, normalizer, recalc_weights, stop_probability, survival_probability, BehaviorMode,
    RecalcMode, TrainConfig, Trainer,
};
use mcfs_core::harness::{median, run_experiment, RunReport};
use mcfs_core::mdp::{check_invariance, TabularMdp};
use mcfs_core::nn::Mlp;
use mcfs_core::qlearner::softmax;
use mcfs_core::{load_csv, synth_classification, Dataset, FeatureSubset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SHAPING_TOL: f64 = 1e-6;
const SHAPING_TIME: Duration = Duration::from_secs(10);
const IS_REL_TOL: f64 = 1e-9;
const RC_SIGMAS: f64 = 3.0;
const RC_EPISODES: usize = 100_000;
const RC_TIME: Duration = Duration::from_secs(30);
const GRAD_REL_TOL: f64 = 1e-4;
const RECOVERY_MARGIN: f64 = 0.01;
const RECOVERY_TIME: Duration = Duration::from_secs(300);
const EVAL_MARGIN: f64 = 0.01;
const SPAMBASE_ACCURACY: f64 = 0.90;
const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn criterion_1_shaping_invariance() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_offset: f64 = 0.0;
    let mut mismatches = 0;
    let mut compared = 0;
    for _ in 0..100 {
        let ns = rng.random_range(1..=8);
        let reward: Vec<f64> = (0..ns * 2).map(|_| rng.random_range(-1.0..1.0)).collect();
        let next: Vec<usize> = (0..ns * 2).map(|_| rng.random_range(0..ns)).collect();
        let mdp = TabularMdp::new(ns, 2, reward, next, 0.9).unwrap();
        let u: Vec<f64> = (0..ns).map(|_| rng.random_range(-2.0..2.0)).collect();
        for c in [0.5, 1.0, 2.0] {
            let r = check_invariance(&mdp, &u, c, SHAPING_TOL).unwrap();
            worst_offset = worst_offset.max(r.max_offset_error);
            compared += r.states_compared;
            if !r.policies_match {
                mismatches += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        mismatches == 0 && worst_offset <= SHAPING_TOL && elapsed < SHAPING_TIME,
        format!(
            "300 MDP/coefficient pairs, {compared} states compared, {mismatches} policy mismatches, max offset error {worst_offset:.2e}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2_incremental_weights() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let len = rng.random_range(1..=50);
        let probs: Vec<(f64, f64)> =
            (0..len).map(|_| (rng.random_range(0.01..=1.0), rng.random_range(0.01..=1.0))).collect();
        let mut rho = 1.0;
        for t in 0..len {
            rho = incremental_weight(rho, probs[t].0, probs[t].1).unwrap();
            let direct: f64 = probs[..=t].iter().map(|(p, b)| p / b).product();
            worst = worst.max((rho - direct).abs() / direct);
        }
    }
    verdict(worst <= IS_REL_TOL, format!("1000 episodes, max relative error {worst:.2e}"))
}

/// Single-step bandit: draw `a ~ b`, weight `rho = pi(a) / b(a)`, reject the
/// draw with probability `stop_probability(rho, v)`, and average
/// `recalc_weight * f(a)` over the survivors. Returns (estimate, exact, SE).
fn rejection_control_bandit(v: f64, seed: u64) -> (f64, f64, f64) {
    let pi = [0.9, 0.1];
    let b = [0.3, 0.7];
    let f = [1.0, 5.0];
    let exact = pi[0] * f[0] + pi[1] * f[1];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rhos = Vec::with_capacity(RC_EPISODES);
    let mut actions = Vec::with_capacity(RC_EPISODES);
    let mut survived = Vec::with_capacity(RC_EPISODES);
    for _ in 0..RC_EPISODES {
        let a = usize::from(rng.random::<f64>() >= b[0]);
        let rho = incremental_weight(1.0, pi[a], b[a]).unwrap();
        let stop = stop_probability(rho, v);
        survived.push(rng.random::<f64>() >= stop);
        rhos.push(rho);
        actions.push(a);
    }
    let p_v = normalizer(RecalcMode::RejectionControl, rhos.iter().map(|&r| survival_probability(r, v)));
    let weights = recalc_weights(&rhos, v, p_v, RecalcMode::RejectionControl).unwrap();
    let survivors = survived.iter().filter(|&&s| s).count();
    let estimate =
        (0..RC_EPISODES).filter(|&i| survived[i]).map(|i| weights[i] * f[actions[i]]).sum::<f64>() / survivors as f64;

    // The estimate is T = a * b / c over three per-draw sample means:
    // a = survival probability (p_v), b = s * rho * f / survival, c = s.
    // Delta-method SE from the linearization of T around those means.
    let n = RC_EPISODES as f64;
    let a: Vec<f64> = rhos.iter().map(|&r| survival_probability(r, v)).collect();
    let b: Vec<f64> = (0..RC_EPISODES)
        .map(|i| if survived[i] { rhos[i] * f[actions[i]] / a[i] } else { 0.0 })
        .collect();
    let c: Vec<f64> = survived.iter().map(|&x| f64::from(u8::from(x))).collect();
    let mean = |x: &[f64]| x.iter().sum::<f64>() / n;
    let (ma, mb, mc) = (mean(&a), mean(&b), mean(&c));
    assert!((ma * mb / mc - estimate).abs() < 1e-9 * estimate.abs().max(1.0));
    let lin: Vec<f64> = (0..RC_EPISODES)
        .map(|i| mb / mc * (a[i] - ma) + ma / mc * (b[i] - mb) - ma * mb / (mc * mc) * (c[i] - mc))
        .collect();
    let var = lin.iter().map(|l| l * l).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    (estimate, exact, se)
}

fn criterion_3_rejection_control() -> Verdict {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, v) in [0.3, 0.6, 0.9].into_iter().enumerate() {
        let (est, exact, se) = rejection_control_bandit(v, 30 + i as u64);
        let z = (est - exact) / se;
        ok &= z.abs() <= RC_SIGMAS;
        parts.push(format!("v={v}: {est:.4} vs {exact:.4} ({z:+.2} SE)"));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < RC_TIME;
    verdict(ok, format!("{}, {:.2}s", parts.join("; "), elapsed.as_secs_f64()))
}

fn batch_loss(mlp: &Mlp, xs: &[Vec<f64>], ts: &[Vec<f64>]) -> f64 {
    let mut loss = 0.0;
    for (x, t) in xs.iter().zip(ts) {
        loss += mlp.forward(x).unwrap().iter().zip(t).map(|(y, t)| (y - t).powi(2)).sum::<f64>();
    }
    loss / xs.len() as f64
}

fn criterion_4_gradients() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for _ in 0..50 {
        let mut sizes = vec![rng.random_range(1..=5)];
        for _ in 0..rng.random_range(1..=3) {
            sizes.push(rng.random_range(1..=5));
        }
        let mut mlp = Mlp::zeros(&sizes);
        for p in mlp.params_mut() {
            *p = rng.random_range(-1.0..1.0);
        }
        let n = rng.random_range(1..=4);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..sizes[0]).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let out = *sizes.last().unwrap();
        let ts: Vec<Vec<f64>> = (0..n).map(|_| (0..out).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let mut grads = vec![0.0; mlp.params().len()];
        for (x, t) in xs.iter().zip(&ts) {
            let y = mlp.forward(x).unwrap();
            let g: Vec<f64> = y.iter().zip(t).map(|(y, t)| 2.0 * (y - t) / n as f64).collect();
            mlp.accumulate_grad(x, &g, &mut grads).unwrap();
        }
        let h = 1e-6;
        for i in 0..grads.len() {
            let mut plus = mlp.clone();
            plus.params_mut()[i] += h;
            let mut minus = mlp.clone();
            minus.params_mut()[i] -= h;
            let fd = (batch_loss(&plus, &xs, &ts) - batch_loss(&minus, &xs, &ts)) / (2.0 * h);
            let denom = fd.abs().max(grads[i].abs());
            // both essentially zero: nothing to compare
            if denom > 1e-7 {
                worst = worst.max((fd - grads[i]).abs() / denom);
            }
            checked += 1;
        }
    }
    verdict(worst <= GRAD_REL_TOL, format!("50 networks, {checked} parameters, max relative error {worst:.2e}"))
}

struct SynthRun {
    report: RunReport,
    hits: usize,
}

fn synth_runs(config: &TrainConfig) -> (Vec<SynthRun>, Duration) {
    let start = Instant::now();
    let runs = SEEDS
        .iter()
        .map(|&seed| {
            let data = synth_classification(500, 20, 5, seed).unwrap();
            let cfg = TrainConfig { seed, ..config.clone() };
            let report = run_experiment(&data.dataset, "synthetic:500,20,5", 0.8, &cfg).unwrap();
            let selected: FeatureSubset = report.best_subset.indices.iter().copied().collect();
            SynthRun { hits: selected.intersection_len(&data.informative), report }
        })
        .collect();
    (runs, start.elapsed())
}

fn med(runs: &[SynthRun], f: impl Fn(&SynthRun) -> f64) -> f64 {
    median(&runs.iter().map(f).collect::<Vec<_>>())
}

fn criterion_5_recovery(runs: &[SynthRun], elapsed: Duration) -> Verdict {
    let selected = med(runs, |r| r.report.test_metrics.accuracy);
    let all = med(runs, |r| r.report.baselines["all_features"].accuracy);
    let random = med(runs, |r| r.report.baselines["random"].accuracy);
    let hits = med(runs, |r| r.hits as f64);
    verdict(
        selected >= all - RECOVERY_MARGIN && selected >= random && hits >= 3.0 && elapsed <= RECOVERY_TIME,
        format!(
            "median test accuracy selected {selected:.3}, all features {all:.3}, random {random:.3}; median informative hits {hits}/5; {:.0}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn mean_length(runs: &[SynthRun]) -> f64 {
    let (sum, n) = runs.iter().flat_map(|r| &r.report.curves).fold((0.0, 0.0), |(s, n), c| (s + c.length as f64, n + 1.0));
    sum / n
}

fn criterion_6_early_stopping(stopped: &[SynthRun], full: &[SynthRun]) -> Verdict {
    let (len_v, len_0) = (mean_length(stopped), mean_length(full));
    let (eval_v, eval_0) = (med(stopped, |r| r.report.best_eval), med(full, |r| r.report.best_eval));
    verdict(
        len_v < len_0 && eval_v >= eval_0 - EVAL_MARGIN,
        format!(
            "mean episode length {len_v:.2} (v=0.5) vs {len_0:.2} (v=0); median final eval {eval_v:.4} vs {eval_0:.4}; median test accuracy {:.3} vs {:.3}",
            med(stopped, |r| r.report.test_metrics.accuracy),
            med(full, |r| r.report.test_metrics.accuracy)
        ),
    )
}

fn criterion_7_behavior(greedy: &[SynthRun], random: &[SynthRun]) -> Verdict {
    let (g, r) = (med(greedy, |x| x.report.best_eval), med(random, |x| x.report.best_eval));
    verdict(
        g >= r,
        format!(
            "median final eval epsilon-greedy {g:.4} vs random {r:.4}; median test accuracy {:.3} vs {:.3}",
            med(greedy, |x| x.report.test_metrics.accuracy),
            med(random, |x| x.report.test_metrics.accuracy)
        ),
    )
}

/// Reads a local Spambase copy named by `MCFS_SPAMBASE`: either the raw
/// headerless 58-column file or a CSV with a `class` column.
fn load_spambase(path: &PathBuf) -> Dataset {
    let text = std::fs::read_to_string(path).expect("readable Spambase file");
    let first = text.lines().next().unwrap_or("");
    if first.split(',').all(|c| c.trim().parse::<f64>().is_ok()) {
        let ncol = first.split(',').count();
        let mut header: Vec<String> = (0..ncol - 1).map(|i| format!("f{i}")).collect();
        header.push("class".into());
        let tmp = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(tmp.path(), format!("{}\n{text}", header.join(","))).unwrap();
        load_csv(tmp.path(), "class").unwrap()
    } else {
        load_csv(path, "class").unwrap()
    }
}

fn criterion_8_spambase() -> Verdict {
    let Some(path) = std::env::var_os("MCFS_SPAMBASE").map(PathBuf::from).filter(|p| p.exists()) else {
        return Verdict::Skip("no local Spambase copy (set MCFS_SPAMBASE to the data file)".into());
    };
    let ds = load_spambase(&path);
    let cfg = TrainConfig { episodes: 500, seed: 0, ..TrainConfig::default() };
    let report = run_experiment(&ds, &path.display().to_string(), 0.8, &cfg).unwrap();
    let acc = report.test_metrics.accuracy;
    verdict(
        acc >= SPAMBASE_ACCURACY && ds.n_features() == 57,
        format!("{} features, {} samples, held-out accuracy {acc:.4}", ds.n_features(), ds.n_samples()),
    )
}

fn strip_wall_times(mut r: RunReport) -> RunReport {
    r.train_wall_ms = 0.0;
    r.total_wall_ms = 0.0;
    for c in &mut r.curves {
        c.wall_ms = 0.0;
    }
    r
}

fn criterion_9_invariants() -> Verdict {
    let data = synth_classification(300, 10, 3, 9).unwrap();
    let sp = split(&data.dataset, 0.8, 9).unwrap();
    let cfg = TrainConfig {
        episodes: 120,
        forest: mcfs_core::ForestParams { n_trees: 20, ..Default::default() },
        seed: 9,
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::new(&sp, &cfg).unwrap();
    let mut problems = Vec::new();
    let mut running = f64::NEG_INFINITY;
    let mut steps = 0;
    let mut max_memory = 0;
    while let Some(ep) = trainer.run_episode().unwrap() {
        let best = trainer.best().unwrap().1;
        if best < running || best != running.max(ep.final_eval) {
            problems.push("best eval not a running max");
        }
        running = best;
        max_memory = max_memory.max(trainer.memory().len());
        for s in &ep.steps {
            let (q0, q1) = trainer.network().q_values(&s.state).unwrap();
            let pi = softmax(q0, q1);
            if ((pi.p0 + pi.p1) - 1.0).abs() > 1e-12 || !(0.0..=1.0).contains(&s.pi_prob) {
                problems.push("target policy does not sum to 1");
            }
            // epsilon-greedy puts 1 - eps on one action and eps on the other
            let b_other = if (s.b_prob - (1.0 - cfg.epsilon)).abs() < 1e-12 { cfg.epsilon } else { 1.0 - cfg.epsilon };
            if ((s.b_prob + b_other) - 1.0).abs() > 1e-12 || ![cfg.epsilon, 1.0 - cfg.epsilon].contains(&s.b_prob) {
                problems.push("behavior policy does not sum to 1");
            }
            steps += 1;
        }
    }
    if max_memory > 200 {
        problems.push("replay memory above capacity");
    }
    let a = strip_wall_times(run_experiment(&data.dataset, "synthetic", 0.8, &cfg).unwrap());
    let b = strip_wall_times(run_experiment(&data.dataset, "synthetic", 0.8, &cfg).unwrap());
    let same = serde_json::to_string(&a).unwrap() == serde_json::to_string(&b).unwrap();
    if !same {
        problems.push("reports differ across identical runs");
    }
    problems.dedup();
    verdict(
        problems.is_empty(),
        format!(
            "{} episodes, {steps} steps, max memory {max_memory}, deterministic {same}{}",
            trainer.curves().len(),
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join(", ")) }
        ),
    )
}

fn main() {
    // `cargo test --test acceptance -- 3 5` runs only the listed criteria
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: usize| only.is_empty() || only.contains(&n);
    let mut failed = 0;
    let mut report = |n: usize, name: &str, v: Verdict| {
        let (tag, detail) = match v {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Skip(d) => ("SKIP", d),
        };
        println!("criterion {n} [{tag}] {name}: {detail}");
    };
    if wanted(1) {
        report(1, "shaping invariance", criterion_1_shaping_invariance());
    }
    if wanted(2) {
        report(2, "incremental importance weights", criterion_2_incremental_weights());
    }
    if wanted(3) {
        report(3, "rejection-control unbiasedness", criterion_3_rejection_control());
    }
    if wanted(4) {
        report(4, "gradient correctness", criterion_4_gradients());
    }
    if wanted(5) || wanted(6) || wanted(7) {
        let (greedy, greedy_time) = synth_runs(&TrainConfig::default());
        if wanted(5) {
            report(5, "end-to-end recovery", criterion_5_recovery(&greedy, greedy_time));
        }
        if wanted(6) {
            let (full, _) = synth_runs(&TrainConfig { stop_threshold: 0.0, ..TrainConfig::default() });
            report(6, "early-stopping efficiency", criterion_6_early_stopping(&greedy, &full));
        }
        if wanted(7) {
            let (random, _) = synth_runs(&TrainConfig { behavior: BehaviorMode::Random, ..TrainConfig::default() });
            report(7, "behavior-policy study", criterion_7_behavior(&greedy, &random));
        }
    }
    if wanted(8) {
        report(8, "Spambase check", criterion_8_spambase());
    }
    if wanted(9) {
        report(9, "engine invariants", criterion_9_invariants());
    }

    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all selected acceptance criteria passed or skipped");
}
