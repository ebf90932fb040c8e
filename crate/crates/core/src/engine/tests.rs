use super::*;
use crate::dataset::{split, synth_classification};

fn small_split() -> Split {
    let s = synth_classification(150, 6, 2, 4).unwrap();
    split(&s.dataset, 0.8, 4).unwrap()
}

fn small_config() -> TrainConfig {
    TrainConfig {
        episodes: 12,
        forest: ForestParams { n_trees: 5, ..ForestParams::default() },
        seed: 9,
        ..TrainConfig::default()
    }
}

fn run_all(config: &TrainConfig) -> (Vec<Episode>, Trainer) {
    let mut trainer = Trainer::new(&small_split(), config).unwrap();
    let mut episodes = Vec::new();
    while let Some(ep) = trainer.run_episode().unwrap() {
        episodes.push(ep);
    }
    (episodes, trainer)
}

#[test]
fn advice_cases() {
    let cfg = TrainConfig { advise_steps: 100, ..TrainConfig::default() };
    assert!((apply_advice(1.0, 0.0, 3.0, &cfg, 1) - 3.7).abs() < 1e-12);
    assert_eq!(apply_advice(1.0, 0.0, 3.0, &cfg, 101), 1.0);
    let off = TrainConfig { advise_steps: 0, ..TrainConfig::default() };
    assert_eq!(apply_advice(1.0, 0.0, 3.0, &off, 1), 1.0);
    let c0 = TrainConfig { shaping_coeff: 0.0, ..TrainConfig::default() };
    assert_eq!(apply_advice(0.4, 2.0, -1.0, &c0, 1), 0.4);
}

#[test]
fn disabled_stopping_reduces_to_plain_traversal() {
    let cfg = TrainConfig { stop_threshold: 0.0, shaping_coeff: 0.0, ..small_config() };
    let (episodes, _) = run_all(&cfg);
    assert_eq!(episodes.len(), 12);
    for ep in &episodes {
        assert_eq!(ep.len(), 6);
        assert!(!ep.stopped_early);
        for s in &ep.steps {
            assert_eq!(s.recalc_weight, s.rho);
            assert_eq!(s.reward, s.env_reward);
            assert_eq!(s.stop_prob, 0.0);
        }
    }
}

#[test]
fn on_policy_weights_stay_at_one() {
    let cfg = TrainConfig { behavior: BehaviorMode::Target, ..small_config() };
    let (episodes, _) = run_all(&cfg);
    for ep in &episodes {
        assert_eq!(ep.len(), 6);
        for s in &ep.steps {
            assert_eq!(s.rho, 1.0);
            assert_eq!(s.stop_prob, (1.0 - 1.0 / cfg.stop_threshold).max(0.0));
        }
    }
}

#[test]
fn episode_invariants_hold() {
    let (episodes, trainer) = run_all(&small_config());
    let mut counts = vec![0u64; 6];
    for ep in &episodes {
        assert!(ep.len() <= 6);
        if ep.stopped_early {
            assert!(ep.len() < 6);
        }
        let mut rho = 1.0;
        for s in &ep.steps {
            assert!(s.b_prob > 0.0 && s.rho > 0.0);
            rho *= s.pi_prob / s.b_prob;
            assert!((s.rho - rho).abs() <= 1e-12 * rho.max(1.0));
            counts[s.feature] += 1;
        }
        let visited: Vec<usize> = ep.steps.iter().map(|s| s.feature).collect();
        assert!(ep.final_subset.iter().all(|f| visited.contains(&f)));
        let mut perm = ep.traversal_order.clone();
        perm.sort_unstable();
        assert_eq!(perm, (0..6).collect::<Vec<_>>());
    }
    assert_eq!(trainer.history().counts(), counts.as_slice());
    assert!(trainer.memory().len() <= 200);
}

#[test]
fn best_eval_tracks_running_max() {
    let out = train(&small_split(), &small_config()).unwrap();
    let max = out.curves.iter().map(|c| c.eval).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(out.best_eval, max);
    assert_eq!(out.curves.len(), 12);
    assert_eq!(out.decision_counts.iter().sum::<u64>() as usize, out.global_steps);
}

#[test]
fn training_is_deterministic() {
    let (a, _) = run_all(&small_config());
    let (b, _) = run_all(&small_config());
    assert_eq!(a, b);
    let (c, _) = run_all(&TrainConfig { seed: 10, ..small_config() });
    assert_ne!(a, c);
}

#[test]
fn global_step_budget_truncates() {
    let cfg = TrainConfig { stop_threshold: 0.0, max_global_steps: 15, ..small_config() };
    let (episodes, trainer) = run_all(&cfg);
    assert_eq!(trainer.global_step(), 15);
    assert_eq!(episodes.len(), 3);
    assert!(episodes[2].truncated);
    assert_eq!(episodes[2].len(), 3);
}

#[test]
fn literal_recalc_rejects_zero_stop_probability() {
    let cfg = TrainConfig { recalc_mode: RecalcMode::PaperLiteral, stop_threshold: 0.0, ..small_config() };
    let mut trainer = Trainer::new(&small_split(), &cfg).unwrap();
    assert!(matches!(trainer.run_episode(), Err(Error::ZeroStopProbability { step: 0 })));
}

#[test]
fn zero_network_selects_nothing() {
    let sp = small_split();
    let env = FeatureEnv::new(&sp.train, &small_config().env_settings()).unwrap();
    let net = QNetwork::zeros(env.state_dim());
    assert!(final_selection(&net, &env).unwrap().is_empty());
}

#[test]
fn final_selection_is_consistent() {
    let out = train(&small_split(), &small_config()).unwrap();
    let net = out.network.as_ref().unwrap();
    let mut env = FeatureEnv::new(&small_split().train, &small_config().env_settings()).unwrap();
    let a = final_selection(net, &env).unwrap();
    assert_eq!(a, final_selection(net, &env).unwrap());
    assert_eq!(a, out.greedy_subset);
    assert_eq!(env.reward(&a).unwrap(), out.greedy_eval);
}

#[test]
fn config_validation() {
    assert!(TrainConfig::default().validate().is_ok());
    for bad in [
        TrainConfig { stop_threshold: 1.5, ..TrainConfig::default() },
        TrainConfig { epsilon: 0.0, ..TrainConfig::default() },
        TrainConfig { gamma: -0.1, ..TrainConfig::default() },
        TrainConfig { shaping_coeff: -1.0, ..TrainConfig::default() },
        TrainConfig { episodes: 0, ..TrainConfig::default() },
        TrainConfig { lr: 0.0, ..TrainConfig::default() },
    ] {
        assert!(bad.validate().is_err());
    }
}

#[test]
fn mode_parsing() {
    assert_eq!("paper".parse::<ReturnMode>().unwrap(), ReturnMode::PaperLiteral);
    assert_eq!("rc".parse::<RecalcMode>().unwrap(), RecalcMode::RejectionControl);
    assert_eq!("random".parse::<BehaviorMode>().unwrap(), BehaviorMode::Random);
    assert!("sideways".parse::<BehaviorMode>().is_err());
}
