//! Library results against independently written reference computations.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sporex::agents::{gae_advantages, Rollout};
use sporex::envs::{value_iteration, RandomMdp};
use sporex::exploration::{pseudo_count, shape_logits, CountModel, DensityForm};
use sporex::numerics::{Activation, MlpNetwork};

/// Plain nested-loop forward pass over the documented flat layout:
/// per layer, row-major weights (out x in) followed by biases.
fn reference_forward(sizes: &[usize], params: &[f64], act: Activation, input: &[f64]) -> Vec<f64> {
    let mut x = input.to_vec();
    let mut off = 0;
    for l in 0..sizes.len() - 1 {
        let (n_in, n_out) = (sizes[l], sizes[l + 1]);
        let w = &params[off..off + n_in * n_out];
        let b = &params[off + n_in * n_out..off + n_in * n_out + n_out];
        off += n_in * n_out + n_out;
        let mut y = vec![0.0; n_out];
        for o in 0..n_out {
            let mut acc = b[o];
            for i in 0..n_in {
                acc += w[o * n_in + i] * x[i];
            }
            y[o] = if l + 2 == sizes.len() {
                acc
            } else {
                match act {
                    Activation::Tanh => acc.tanh(),
                    Activation::Relu => acc.max(0.0),
                }
            };
        }
        x = y;
    }
    x
}

#[test]
fn forward_pass_matches_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (sizes, act) in [
        (vec![5, 128, 128, 3], Activation::Tanh),
        (vec![7, 64, 64, 1], Activation::Relu),
        (vec![9, 16, 4, 16, 9], Activation::Tanh),
        (vec![2, 1], Activation::Tanh),
    ] {
        let net = MlpNetwork::<f64>::new(&sizes, act, &mut rng).unwrap();
        assert_eq!(net.num_params(), sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum::<usize>());
        for _ in 0..20 {
            let x: Vec<f64> = (0..sizes[0]).map(|_| rng.random_range(-2.0..2.0)).collect();
            let got = net.predict(&x).unwrap();
            let want = reference_forward(&sizes, net.params(), act, &x);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-12, "{g} vs {w}");
            }
        }
    }
}

/// Exact value of a deterministic policy by solving (I - gamma P) v = r.
fn policy_value(mdp: &RandomMdp, policy: &[usize]) -> Vec<f64> {
    let n = mdp.n_states;
    let mut a = vec![vec![0.0; n + 1]; n];
    for s in 0..n {
        let act = policy[s];
        for s2 in 0..n {
            a[s][s2] = if s == s2 { 1.0 } else { 0.0 } - mdp.gamma * mdp.transitions[s][act][s2];
        }
        a[s][n] = mdp.rewards[s][act];
    }
    // Gauss-Jordan with partial pivoting
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=n {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    (0..n).map(|s| a[s][n] / a[s][s]).collect()
}

#[test]
fn value_iteration_matches_policy_enumeration() {
    for seed in 0..10 {
        let mdp = RandomMdp::generate(5, 2, 0.9, seed).unwrap();
        let vi = value_iteration(&mdp, 1e-10).unwrap();
        let mut best = vec![f64::NEG_INFINITY; 5];
        let mut best_policy = vec![];
        let mut best_total = f64::NEG_INFINITY;
        for bits in 0..32usize {
            let policy: Vec<usize> = (0..5).map(|s| (bits >> s) & 1).collect();
            let v = policy_value(&mdp, &policy);
            for s in 0..5 {
                best[s] = best[s].max(v[s]);
            }
            let total: f64 = v.iter().sum();
            if total > best_total {
                best_total = total;
                best_policy = policy;
            }
        }
        for s in 0..5 {
            assert!((vi.values[s] - best[s]).abs() <= 1e-6, "seed {seed} state {s}: {} vs {}", vi.values[s], best[s]);
        }
        assert_eq!(vi.policy, best_policy, "seed {seed}");
    }
}

#[test]
fn value_iteration_trivial_cases() {
    let one = RandomMdp { n_states: 1, n_actions: 1, transitions: vec![vec![vec![1.0]]], rewards: vec![vec![1.0]], gamma: 0.9 };
    assert!((value_iteration(&one, 1e-12).unwrap().values[0] - 10.0).abs() < 1e-9);
    let mut zero = RandomMdp::generate(4, 3, 0.95, 1).unwrap();
    zero.rewards = vec![vec![0.0; 3]; 4];
    assert!(value_iteration(&zero, 1e-12).unwrap().values.iter().all(|&v| v == 0.0));
}

fn rollout_strategy() -> impl Strategy<Value = (Rollout, f64, f64)> {
    (1usize..4, 1usize..40, 0.5f64..1.0, 0.0f64..=1.0, any::<u64>()).prop_map(|(actors, horizon, gamma, lambda, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = actors * horizon;
        let terminated: Vec<bool> = (0..n).map(|_| rng.random_bool(0.1)).collect();
        let truncated = terminated.iter().map(|&t| !t && rng.random_bool(0.1)).collect();
        let r = Rollout {
            n_actors: actors,
            horizon,
            observations: vec![vec![]; n],
            actions: vec![0; n],
            behavior_log_probs: vec![0.0; n],
            epsilons: vec![None; n],
            rewards_ext: vec![0.0; n],
            rewards: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            values: (0..n).map(|_| rng.random_range(-3.0..3.0)).collect(),
            next_values: (0..n).map(|_| rng.random_range(-3.0..3.0)).collect(),
            terminated,
            truncated,
            advantages: vec![],
            returns: vec![],
        };
        (r, gamma, lambda)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gae_equals_truncated_discounted_td_sum((mut r, gamma, lambda) in rollout_strategy()) {
        gae_advantages(&mut r, gamma, lambda).unwrap();
        for actor in 0..r.n_actors {
            for t in 0..r.horizon {
                let mut sum = 0.0;
                for k in 0..r.horizon - t {
                    let i = (t + k) * r.n_actors + actor;
                    let next = if r.terminated[i] { 0.0 } else { r.next_values[i] };
                    let delta = r.rewards[i] + gamma * next - r.values[i];
                    sum += (gamma * lambda).powi(k as i32) * delta;
                    if r.terminated[i] || r.truncated[i] {
                        break;
                    }
                }
                let i = t * r.n_actors + actor;
                prop_assert!((r.advantages[i] - sum).abs() <= 1e-10);
                prop_assert!((r.returns[i] - (sum + r.values[i])).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn pseudo_count_recovers_counts(visits in prop::collection::vec(0i32..10, 2..3000)) {
        let mut m = CountModel::new();
        for v in &visits {
            m.record_visit(&[*v]);
        }
        let degenerate = m.distinct_states() == 1;
        for s in 0..10 {
            let truth = visits.iter().filter(|&&v| v == s).count() as f64;
            if degenerate && truth as u64 == m.total() {
                continue;
            }
            let n: f64 = m.pseudo_count_of(&[s], DensityForm::Recoding).unwrap();
            prop_assert!((n - truth).abs() <= 1e-9, "state {} got {} want {}", s, n, truth);
        }
    }

    #[test]
    fn pseudo_count_inverts_empirical_densities(count in 0u64..5000, extra in 1u64..5000) {
        // n visits of a state out of t total: rho = n / t, rho' = (n + 1) / (t + 1)
        let t = count + extra;
        let rho = count as f64 / t as f64;
        let rho_next = (count + 1) as f64 / (t + 1) as f64;
        let n = pseudo_count(rho, rho_next).unwrap();
        prop_assert!((n - count as f64).abs() <= 1e-9 * (1.0 + count as f64));
    }

    #[test]
    fn shaping_is_a_valid_distribution(
        logits in prop::collection::vec(-20.0f64..20.0, 2..10),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eps: Vec<f64> = (0..logits.len()).map(|_| rng.random_range(0.0..1.0)).collect();
        let p = shape_logits(&logits, &eps).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!(p.iter().all(|&x| x > 0.0 && x.is_finite()));
    }

    #[test]
    fn shaping_ignores_uniform_eps_and_keeps_ranking(
        logits in prop::collection::vec(-20.0f64..20.0, 2..10),
        c in 0.0f64..5.0,
    ) {
        let n = logits.len();
        let zero = shape_logits(&logits, &vec![0.0; n]).unwrap();
        let uni = shape_logits(&logits, &vec![c; n]).unwrap();
        for (a, b) in zero.iter().zip(&uni) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        for i in 0..n {
            for j in 0..n {
                if logits[i] > logits[j] {
                    prop_assert!(zero[i] > zero[j]);
                }
            }
        }
    }
}
