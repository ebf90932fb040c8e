use mcfs_core::mdp::{check_invariance, value_iteration, TabularMdp};
use proptest::prelude::*;

/// Q* by enumerating every deterministic policy and solving its linear
/// system exactly (Gaussian elimination), then taking the best.
fn brute_force_q(mdp: &TabularMdp) -> Vec<f64> {
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let mut best_v = vec![f64::NEG_INFINITY; ns];
    let mut policy = vec![0usize; ns];
    loop {
        let v = evaluate_policy(mdp, &policy);
        for s in 0..ns {
            best_v[s] = best_v[s].max(v[s]);
        }
        // next policy in mixed-radix order
        let mut i = 0;
        while i < ns {
            policy[i] += 1;
            if policy[i] < na {
                break;
            }
            policy[i] = 0;
            i += 1;
        }
        if i == ns {
            break;
        }
    }
    let mut q = Vec::with_capacity(ns * na);
    for s in 0..ns {
        for a in 0..na {
            q.push(mdp.reward(s, a) + mdp.gamma() * best_v[mdp.next_state(s, a)]);
        }
    }
    q
}

fn evaluate_policy(mdp: &TabularMdp, policy: &[usize]) -> Vec<f64> {
    let n = mdp.n_states();
    // (I - gamma P) v = r
    let mut a = vec![vec![0.0; n + 1]; n];
    for s in 0..n {
        a[s][s] += 1.0;
        a[s][mdp.next_state(s, policy[s])] -= mdp.gamma();
        a[s][n] = mdp.reward(s, policy[s]);
    }
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..=n {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    (0..n).map(|s| a[s][n] / a[s][s]).collect()
}

fn mdp_strategy() -> impl Strategy<Value = TabularMdp> {
    (1usize..=6).prop_flat_map(|ns| {
        (
            prop::collection::vec(-2.0f64..2.0, ns * 2),
            prop::collection::vec(0..ns, ns * 2),
            0.0f64..0.95,
        )
            .prop_map(move |(r, next, gamma)| TabularMdp::new(ns, 2, r, next, gamma).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn value_iteration_matches_policy_enumeration(mdp in mdp_strategy()) {
        let q = value_iteration(&mdp, 1e-12).unwrap();
        let want = brute_force_q(&mdp);
        for s in 0..mdp.n_states() {
            for a in 0..2 {
                prop_assert!((q.get(s, a) - want[s * 2 + a]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn shaping_preserves_greedy_policy(mdp in mdp_strategy(), seed_u in prop::collection::vec(-3.0f64..3.0, 6),
                                       c in 0.0f64..3.0) {
        let u = &seed_u[..mdp.n_states()];
        let report = check_invariance(&mdp, u, c, 1e-6).unwrap();
        prop_assert!(report.policies_match);
        prop_assert!(report.max_offset_error <= 1e-6);
        // the brute-force oracle agrees on the shifted values too
        let shaped = brute_force_q(&mdp.shaped(u, c).unwrap());
        let base = brute_force_q(&mdp);
        for s in 0..mdp.n_states() {
            for a in 0..2 {
                prop_assert!((shaped[s * 2 + a] - (base[s * 2 + a] - c * u[s])).abs() < 1e-8);
            }
        }
    }
}
