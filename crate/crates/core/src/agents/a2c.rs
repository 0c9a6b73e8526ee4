use super::losses::{a2c_batch_loss, Sample};
use super::rollout::Rollout;
use super::trainer::UpdateStats;
use super::A2cConfig;
use crate::error::{Error, Result};
use crate::numerics::{AdamState, MlpNetwork};

/// One Adam step on the advantage actor-critic loss over the whole rollout.
///
/// The rollout's advantages must be n-step advantages (`R_t - V(s_t)`), which
/// is what [`gae_advantages`](super::gae_advantages) produces with `lambda = 1`.
pub fn a2c_update(
    policy: &mut MlpNetwork<f64>,
    value: &mut MlpNetwork<f64>,
    policy_opt: &mut AdamState<f64>,
    value_opt: &mut AdamState<f64>,
    rollout: &Rollout,
    cfg: &A2cConfig,
) -> Result<UpdateStats> {
    let n = rollout.len();
    if rollout.advantages.len() != n || rollout.returns.len() != n || n == 0 {
        return Err(Error::usage("a2c_update needs a rollout with computed returns"));
    }
    policy_opt.step_size = cfg.step_size;
    value_opt.step_size = cfg.step_size;
    let samples: Vec<Sample<'_>> = (0..n)
        .map(|i| Sample {
            observation: &rollout.observations[i],
            action: rollout.actions[i],
            behavior_log_prob: rollout.behavior_log_probs[i],
            advantage: rollout.advantages[i],
            target_return: rollout.returns[i],
        })
        .collect();
    let loss = a2c_batch_loss(policy, value, &samples, cfg.value_coeff, cfg.entropy_coeff)?;
    policy_opt.step(policy.params_mut(), &loss.policy_grad)?;
    value_opt.step(value.params_mut(), &loss.value_grad)?;
    let mut stats = UpdateStats::default();
    stats.record(&loss);
    stats.finish();
    Ok(stats)
}
