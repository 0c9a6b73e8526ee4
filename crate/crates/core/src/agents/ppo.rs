use rand::seq::SliceRandom;
use rand::Rng;

use super::losses::{ppo_batch_loss, Sample};
use super::rollout::Rollout;
use super::trainer::UpdateStats;
use super::PpoConfig;
use crate::error::{Error, Result};
use crate::numerics::{AdamState, MlpNetwork};

/// Lower bound on the standard deviation used to normalize advantages.
pub const ADVANTAGE_STD_FLOOR: f64 = 1e-8;

/// `(a - mean) / max(std, floor)` with the population standard deviation.
pub fn normalize_advantages(advantages: &[f64]) -> Vec<f64> {
    if advantages.is_empty() {
        return Vec::new();
    }
    let n = advantages.len() as f64;
    let mean = advantages.iter().sum::<f64>() / n;
    let var = advantages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt().max(ADVANTAGE_STD_FLOOR);
    advantages.iter().map(|a| (a - mean) / std).collect()
}

/// Clipped-surrogate update over `cfg.epochs` passes, each split into
/// `cfg.minibatches` shuffled minibatches with one Adam step apiece.
/// Step size and clip range are annealed by `progress`.
#[allow(clippy::too_many_arguments)]
pub fn ppo_update<R: Rng + ?Sized>(
    policy: &mut MlpNetwork<f64>,
    value: &mut MlpNetwork<f64>,
    policy_opt: &mut AdamState<f64>,
    value_opt: &mut AdamState<f64>,
    rollout: &Rollout,
    cfg: &PpoConfig,
    progress: f64,
    rng: &mut R,
) -> Result<UpdateStats> {
    let n = rollout.len();
    if rollout.advantages.len() != n || rollout.returns.len() != n || n == 0 {
        return Err(Error::usage("ppo_update needs a rollout with computed advantages"));
    }
    let (step_size, clip) = cfg.annealed(progress);
    policy_opt.step_size = step_size;
    value_opt.step_size = step_size;
    let advantages = normalize_advantages(&rollout.advantages);

    let mut order: Vec<usize> = (0..n).collect();
    let mut stats = UpdateStats::default();
    let chunk = n.div_ceil(cfg.minibatches);
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for mb in order.chunks(chunk) {
            let samples: Vec<Sample<'_>> = mb
                .iter()
                .map(|&i| Sample {
                    observation: &rollout.observations[i],
                    action: rollout.actions[i],
                    behavior_log_prob: rollout.behavior_log_probs[i],
                    advantage: advantages[i],
                    target_return: rollout.returns[i],
                })
                .collect();
            let loss = ppo_batch_loss(policy, value, &samples, clip, cfg.value_coeff, cfg.entropy_coeff)?;
            policy_opt.step(policy.params_mut(), &loss.policy_grad)?;
            value_opt.step(value.params_mut(), &loss.value_grad)?;
            stats.record(&loss);
        }
    }
    stats.finish();
    Ok(stats)
}
