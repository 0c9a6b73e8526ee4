//! Built-in oracle suite run by the `verify` subcommand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agents::losses::{batch_loss, sample_terms, Objective, Sample};
use crate::agents::{gae_advantages, Rollout};
use crate::error::Result;
use crate::exploration::{
    perturb_reward, shape_logits, sporadic_epsilons, CountModel, DensityForm, EncoderKind, NoveltyConfig,
    NoveltyModels, RewardPerturbConfig,
};
use crate::numerics::gradcheck::{FD_STEP, FIVE_POINT_STEP};
use crate::numerics::{check_gradient_with, log_softmax, Activation, MlpNetwork, Stencil};

pub const GRADIENT_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.to_string(), passed, detail }
    }
}

pub fn run_all() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for act in [Activation::Tanh, Activation::Relu] {
        out.push(loss_gradients(Objective::Ppo { clip: 0.2 }, act, Shape::SMALL, 11)?);
        out.push(loss_gradients(Objective::A2c, act, Shape::SMALL, 12)?);
    }
    out.push(novelty_gradients(EncoderKind::Identity, 5, 3, 13)?);
    out.push(novelty_gradients(EncoderKind::RandomNetwork, 5, 3, 14)?);
    out.push(pseudo_count_round_trip(200, 15)?);
    out.push(shaping_invariances(2000, 16)?);
    out.push(sporadic_reward_statistics(1_000_000, 17));
    out.push(gae_oracle(200, 18)?);
    out.push(structured_simplex(19)?);
    Ok(out)
}

fn objective_name(o: Objective) -> &'static str {
    match o {
        Objective::Ppo { .. } => "ppo",
        Objective::A2c => "a2c",
    }
}

/// Log-ratio offsets kept away from the clip boundaries, where the
/// surrogate has a kink and central differences are meaningless.
fn safe_log_ratio(rng: &mut ChaCha8Rng, clip: f64) -> f64 {
    let lo = (1.0 - clip).ln();
    let hi = (1.0 + clip).ln();
    match rng.random_range(0..3) {
        0 => rng.random_range(lo * 0.5..hi * 0.5),
        1 => rng.random_range(hi * 1.5..hi * 3.0),
        _ => rng.random_range(lo * 3.0..lo * 1.5),
    }
}

/// Policy and value network shape for a gradient check.
#[derive(Debug, Clone, Copy)]
pub struct Shape<'a> {
    pub obs_dim: usize,
    pub hidden: &'a [usize],
    pub n_actions: usize,
}

impl Shape<'static> {
    pub const SMALL: Self = Shape { obs_dim: 5, hidden: &[16, 16], n_actions: 3 };
}

impl Shape<'_> {
    fn sizes(&self, out: usize) -> Vec<usize> {
        std::iter::once(self.obs_dim).chain(self.hidden.iter().copied()).chain(std::iter::once(out)).collect()
    }

    fn label(&self) -> String {
        let mut s = self.sizes(self.n_actions).iter().map(|n| n.to_string()).collect::<Vec<_>>().join("-");
        s.push_str(&format!(" / {}", self.sizes(1).iter().map(|n| n.to_string()).collect::<Vec<_>>().join("-")));
        s
    }
}

/// Tanh networks are smooth, so the five-point stencil with a larger step
/// keeps roundoff small; relu kinks call for the small two-point step.
fn stencil_for(act: Activation) -> (Stencil, f64) {
    match act {
        Activation::Tanh => (Stencil::FivePoint, FIVE_POINT_STEP),
        Activation::Relu => (Stencil::Central, FD_STEP),
    }
}

/// Full batch loss (surrogate, value and entropy terms) against central
/// differences, for both networks.
pub fn loss_gradients(objective: Objective, act: Activation, shape: Shape<'_>, seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (obs_dim, n_actions, batch) = (shape.obs_dim, shape.n_actions, 12);
    let policy = MlpNetwork::<f64>::new(&shape.sizes(n_actions), act, &mut rng)?;
    let value = MlpNetwork::<f64>::new(&shape.sizes(1), act, &mut rng)?;
    let clip = match objective {
        Objective::Ppo { clip } => clip,
        Objective::A2c => 0.2,
    };
    let obs: Vec<Vec<f64>> = (0..batch).map(|_| (0..obs_dim).map(|_| rng.random_range(-1.5..1.5)).collect()).collect();
    let mut meta = Vec::new();
    for o in &obs {
        let a = rng.random_range(0..n_actions);
        let lp = log_softmax(&policy.predict(o)?)?[a];
        meta.push((a, lp - safe_log_ratio(&mut rng, clip), rng.random_range(-2.0..2.0), rng.random_range(-1.0..3.0)));
    }
    let samples: Vec<Sample<'_>> = obs
        .iter()
        .zip(&meta)
        .map(|(o, &(action, behavior_log_prob, advantage, target_return))| Sample {
            observation: o,
            action,
            behavior_log_prob,
            advantage,
            target_return,
        })
        .collect();
    let (vc, ec) = (0.5, 0.01);
    let full = batch_loss(objective, &policy, &value, &samples, vc, ec)?;
    let (stencil, step) = stencil_for(act);

    // forward passes only; the network not being perturbed keeps its outputs
    let logits = samples.iter().map(|s| policy.predict(s.observation)).collect::<Result<Vec<_>>>()?;
    let values = samples.iter().map(|s| value.predict(s.observation).map(|v| v[0])).collect::<Result<Vec<_>>>()?;
    let mean_loss = |logits: &dyn Fn(usize) -> Vec<f64>, values: &dyn Fn(usize) -> f64| -> f64 {
        let mut total = 0.0;
        for (i, s) in samples.iter().enumerate() {
            match sample_terms(objective, &logits(i), values(i), s, vc, ec) {
                Ok(t) => total += t.policy + vc * t.value - ec * t.entropy,
                Err(_) => return f64::NAN,
            }
        }
        total / samples.len() as f64
    };

    let mut p_probe = policy.clone();
    let rp = check_gradient_with(
        policy.params(),
        &full.policy_grad,
        |p| {
            p_probe.params_mut().copy_from_slice(p);
            let probe = &p_probe;
            mean_loss(&|i| probe.predict(samples[i].observation).unwrap_or_else(|_| vec![f64::NAN]), &|i| values[i])
        },
        stencil,
        step,
        GRADIENT_TOLERANCE,
    );
    let mut v_probe = value.clone();
    let rv = check_gradient_with(
        value.params(),
        &full.value_grad,
        |p| {
            v_probe.params_mut().copy_from_slice(p);
            let probe = &v_probe;
            mean_loss(&|i| logits[i].clone(), &|i| probe.predict(samples[i].observation).map_or(f64::NAN, |v| v[0]))
        },
        stencil,
        step,
        GRADIENT_TOLERANCE,
    );
    let act_name = match act {
        Activation::Tanh => "tanh",
        Activation::Relu => "relu",
    };
    Ok(Check::new(
        &format!("gradient {} loss ({act_name}, {})", objective_name(objective), shape.label()),
        rp.passed && rv.passed,
        format!("policy max rel err {:.2e}, value max rel err {:.2e}", rp.max_relative_error, rv.max_relative_error),
    ))
}

/// Reconstruction and forward-model losses against central differences.
pub fn novelty_gradients(encoder: EncoderKind, obs_dim: usize, n_actions: usize, seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = NoveltyConfig { encoder, ..Default::default() };
    let models = NoveltyModels::<f64>::new(obs_dim, n_actions, &cfg, seed)?;
    let s: Vec<f64> = (0..obs_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let s2: Vec<f64> = (0..obs_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let a = n_actions - 1;

    let (_, g_ae) = models.reconstruction_loss_and_grad(&s, a)?;
    let mut probe = models.clone();
    let r_ae = check_gradient_with(
        models.autoencoder.params(),
        &g_ae,
        |p| {
            probe.autoencoder.params_mut().copy_from_slice(p);
            probe.encoding_error(&s, a).unwrap_or(f64::NAN)
        },
        Stencil::FivePoint,
        FIVE_POINT_STEP,
        GRADIENT_TOLERANCE,
    );
    let (_, g_fm) = models.prediction_loss_and_grad(&s, a, &s2)?;
    let mut probe = models.clone();
    let r_fm = check_gradient_with(
        models.forward_model.params(),
        &g_fm,
        |p| {
            probe.forward_model.params_mut().copy_from_slice(p);
            probe.prediction_error(&s, a, &s2).unwrap_or(f64::NAN)
        },
        Stencil::FivePoint,
        FIVE_POINT_STEP,
        GRADIENT_TOLERANCE,
    );
    let encoder_name = match encoder {
        EncoderKind::Identity => "identity",
        EncoderKind::RandomNetwork => "random",
    };
    Ok(Check::new(
        &format!("gradient novelty models ({encoder_name} encoder, {obs_dim} obs, {n_actions} actions)"),
        r_ae.passed && r_fm.passed,
        format!("autoencoder {:.2e}, forward model {:.2e}", r_ae.max_relative_error, r_fm.max_relative_error),
    ))
}

pub fn pseudo_count_round_trip(sequences: usize, seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut exact = true;
    for _ in 0..sequences {
        let mut m = CountModel::new();
        let len = rng.random_range(1..=2000);
        for _ in 0..len {
            m.record_visit(&[rng.random_range(0..10)]);
        }
        for s in 0..10 {
            let key = [s];
            if m.distinct_states() == 1 && m.count(&key) == m.total() {
                // a single visited state makes the density pair degenerate (1, 1)
                continue;
            }
            let n = m.pseudo_count_of::<f64>(&key, DensityForm::Recoding)?;
            let err = (n - m.count(&key) as f64).abs();
            worst = worst.max(err);
            exact &= n.round() as u64 == m.count(&key);
        }
    }
    Ok(Check::new(
        "pseudo-count round trip",
        exact && worst <= 1e-9,
        format!("{sequences} sequences, max error {worst:.2e}"),
    ))
}

pub fn shaping_invariances(pairs: usize, seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum_err, mut uniform_err) = (0.0f64, 0.0f64);
    let mut ranking = true;
    for _ in 0..pairs {
        let n = rng.random_range(2..8);
        let logits: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let eps: Vec<f64> = sporadic_epsilons(n, 0.5, &mut rng);
        let p = shape_logits(&logits, &eps)?;
        sum_err = sum_err.max((p.iter().sum::<f64>() - 1.0).abs());
        let c = rng.random_range(0.0..1.0);
        let zero = shape_logits(&logits, &vec![0.0; n])?;
        let uni = shape_logits(&logits, &vec![c; n])?;
        uniform_err = uniform_err.max(zero.iter().zip(&uni).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        for i in 0..n {
            for j in 0..n {
                if logits[i] > logits[j] && !(zero[i] > zero[j]) {
                    ranking = false;
                }
            }
        }
    }
    Ok(Check::new(
        "shaping invariances",
        sum_err <= 1e-9 && uniform_err <= 1e-12 && ranking,
        format!("{pairs} pairs, sum err {sum_err:.2e}, uniform-eps dev {uniform_err:.2e}, ranking kept {ranking}"),
    ))
}

pub fn sporadic_reward_statistics(draws: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = RewardPerturbConfig::default();
    let (mut hits, mut total) = (0usize, 0.0f64);
    for _ in 0..draws {
        let b: f64 = perturb_reward(0.0, &cfg, &mut rng);
        if b > 0.0 {
            hits += 1;
        }
        total += b;
    }
    let freq = hits as f64 / draws as f64;
    let mean = total / draws as f64;
    let mut silent = true;
    for c in [RewardPerturbConfig { beta: 0.0, ..cfg.clone() }, RewardPerturbConfig { probability: 0.0, ..cfg.clone() }] {
        for _ in 0..10_000 {
            silent &= perturb_reward(0.25, &c, &mut rng) == 0.25;
        }
    }
    Check::new(
        "sporadic reward statistics",
        (freq - 0.5).abs() <= 0.005 && (mean - 0.025).abs() <= 0.001 && silent,
        format!("{draws} draws, frequency {freq:.4}, mean bonus {mean:.5}, silent channels exact {silent}"),
    )
}

pub fn random_rollout(rng: &mut ChaCha8Rng, n_actors: usize, horizon: usize) -> Rollout {
    let n = n_actors * horizon;
    let terminated: Vec<bool> = (0..n).map(|_| rng.random_bool(0.1)).collect();
    let truncated: Vec<bool> = terminated.iter().map(|&t| !t && rng.random_bool(0.05)).collect();
    Rollout {
        n_actors,
        horizon,
        observations: vec![vec![]; n],
        actions: vec![0; n],
        behavior_log_probs: vec![0.0; n],
        epsilons: vec![None; n],
        rewards_ext: vec![0.0; n],
        rewards: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        values: (0..n).map(|_| rng.random_range(-2.0..2.0)).collect(),
        next_values: (0..n).map(|_| rng.random_range(-2.0..2.0)).collect(),
        terminated,
        truncated,
        advantages: vec![],
        returns: vec![],
    }
}

/// `A_t = sum_k (gamma lambda)^k delta_{t+k}`, summed up to the end of the episode or rollout.
pub fn direct_gae(r: &Rollout, gamma: f64, lambda: f64) -> Vec<f64> {
    let mut out = vec![0.0; r.len()];
    for actor in 0..r.n_actors {
        for t in 0..r.horizon {
            let mut acc = 0.0;
            let mut w = 1.0;
            for k in t..r.horizon {
                let i = r.index(k, actor);
                let boot = if r.terminated[i] { 0.0 } else { gamma * r.next_values[i] };
                acc += w * (r.rewards[i] + boot - r.values[i]);
                if r.terminated[i] || r.truncated[i] {
                    break;
                }
                w *= gamma * lambda;
            }
            out[r.index(t, actor)] = acc;
        }
    }
    out
}

pub fn gae_oracle(rollouts: usize, seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..rollouts {
        let (actors, horizon) = (rng.random_range(1..5), rng.random_range(1..64));
        let (gamma, lambda) = (rng.random_range(0.8..1.0), rng.random_range(0.0..=1.0));
        let mut r = random_rollout(&mut rng, actors, horizon);
        gae_advantages(&mut r, gamma, lambda)?;
        let direct = direct_gae(&r, gamma, lambda);
        worst = worst.max(r.advantages.iter().zip(&direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    Ok(Check::new("gae oracle", worst <= 1e-10, format!("{rollouts} rollouts, max deviation {worst:.2e}")))
}

pub fn structured_simplex(seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut models = NoveltyModels::<f64>::new(4, 3, &NoveltyConfig::default(), seed)?;
    let s: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut worst = 0.0f64;
    for _ in 0..300 {
        models.train_autoencoder(&s, 0)?;
        let e = models.structured_epsilons(&s)?;
        worst = worst.max((e.iter().sum::<f64>() - 1.0).abs());
    }
    let e = models.structured_epsilons(&s)?;
    let lowest = e[0] < e[1] && e[0] < e[2];
    Ok(Check::new(
        "structured epsilon simplex",
        worst <= 1e-9 && lowest,
        format!("sum err {worst:.2e}, trained action minimal {lowest}"),
    ))
}
