//! Training losses and their analytic gradients.
//!
//! Both losses are means over a batch of samples:
//!
//! * PPO: `-min(r A, clip(r, 1-c, 1+c) A) + c_v (V - R)^2 - c_e H(pi)`, with
//!   `r = exp(log pi(a|s) - log pi_b(a|s))`;
//! * A2C: `-log pi(a|s) A + c_v (V - R)^2 - c_e H(pi)`.
//!
//! `pi` is the softmax of the policy network's logits. The behavior
//! log-probability stands in for the old policy, so no further importance
//! correction is applied when actions came from a shaped distribution.

use crate::error::{Error, Result};
use crate::numerics::{entropy, log_softmax, MlpNetwork};

#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub observation: &'a [f64],
    pub action: usize,
    pub behavior_log_prob: f64,
    pub advantage: f64,
    pub target_return: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchLoss {
    pub loss: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    /// Fraction of samples whose ratio was outside the clip range (PPO only).
    pub clip_fraction: f64,
    pub policy_grad: Vec<f64>,
    pub value_grad: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    Ppo { clip: f64 },
    A2c,
}

/// Per-sample loss terms with gradients with respect to the logits and the value.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTerms {
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub clipped: bool,
    pub d_logits: Vec<f64>,
    pub d_value: f64,
}

pub fn sample_terms(
    objective: Objective,
    logits: &[f64],
    value: f64,
    s: &Sample<'_>,
    value_coeff: f64,
    entropy_coeff: f64,
) -> Result<SampleTerms> {
    if s.action >= logits.len() {
        return Err(Error::usage(format!("action {} out of range for {} logits", s.action, logits.len())));
    }
    let log_probs = log_softmax(logits)?;
    let probs: Vec<f64> = log_probs.iter().map(|l| l.exp()).collect();
    let h = entropy(&probs);
    let logp = log_probs[s.action];

    // d log pi(a) / d logits = onehot(a) - p
    let mut d_logits: Vec<f64> = probs.iter().map(|p| -p).collect();
    d_logits[s.action] += 1.0;

    let (policy, scale, clipped) = match objective {
        Objective::A2c => (-logp * s.advantage, -s.advantage, false),
        Objective::Ppo { clip } => {
            let ratio = (logp - s.behavior_log_prob).exp();
            let clipped_ratio = ratio.clamp(1.0 - clip, 1.0 + clip);
            let unclipped = ratio * s.advantage;
            let bounded = clipped_ratio * s.advantage;
            let outside = ratio < 1.0 - clip || ratio > 1.0 + clip;
            if unclipped <= bounded || !outside {
                (-unclipped, -s.advantage * ratio, false)
            } else {
                (-bounded, 0.0, true)
            }
        }
    };
    for g in &mut d_logits {
        *g *= scale;
    }
    // dH/dz_j = -p_j (log p_j + H); the loss carries -c_e H
    for (j, g) in d_logits.iter_mut().enumerate() {
        *g += entropy_coeff * probs[j] * (log_probs[j] + h);
    }
    let err = value - s.target_return;
    Ok(SampleTerms {
        policy,
        value: err * err,
        entropy: h,
        clipped,
        d_logits,
        d_value: 2.0 * value_coeff * err,
    })
}

/// Mean loss over `samples` and gradients for both networks.
pub fn batch_loss(
    objective: Objective,
    policy: &MlpNetwork<f64>,
    value: &MlpNetwork<f64>,
    samples: &[Sample<'_>],
    value_coeff: f64,
    entropy_coeff: f64,
) -> Result<BatchLoss> {
    if samples.is_empty() {
        return Err(Error::usage("loss over an empty batch"));
    }
    let inv = 1.0 / samples.len() as f64;
    let mut policy_grad = policy.zero_gradients();
    let mut value_grad = value.zero_gradients();
    let (mut pl, mut vl, mut ent, mut clipped) = (0.0, 0.0, 0.0, 0usize);
    for s in samples {
        let (logits, pcache) = policy.forward(s.observation)?;
        let (v, vcache) = value.forward(s.observation)?;
        let terms = sample_terms(objective, &logits, v[0], s, value_coeff, entropy_coeff)?;
        pl += terms.policy;
        vl += terms.value;
        ent += terms.entropy;
        clipped += terms.clipped as usize;
        let d_logits: Vec<f64> = terms.d_logits.iter().map(|g| g * inv).collect();
        policy.backward_into(&pcache, &d_logits, &mut policy_grad)?;
        value.backward_into(&vcache, &[terms.d_value * inv], &mut value_grad)?;
    }
    let (pl, vl, ent) = (pl * inv, vl * inv, ent * inv);
    let loss = pl + value_coeff * vl - entropy_coeff * ent;
    if !loss.is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite loss (policy {pl}, value {vl}, entropy {ent}) over {} samples",
            samples.len()
        )));
    }
    Ok(BatchLoss {
        loss,
        policy_loss: pl,
        value_loss: vl,
        entropy: ent,
        clip_fraction: clipped as f64 * inv,
        policy_grad,
        value_grad,
    })
}

pub fn ppo_batch_loss(
    policy: &MlpNetwork<f64>,
    value: &MlpNetwork<f64>,
    samples: &[Sample<'_>],
    clip: f64,
    value_coeff: f64,
    entropy_coeff: f64,
) -> Result<BatchLoss> {
    batch_loss(Objective::Ppo { clip }, policy, value, samples, value_coeff, entropy_coeff)
}

pub fn a2c_batch_loss(
    policy: &MlpNetwork<f64>,
    value: &MlpNetwork<f64>,
    samples: &[Sample<'_>],
    value_coeff: f64,
    entropy_coeff: f64,
) -> Result<BatchLoss> {
    batch_loss(Objective::A2c, policy, value, samples, value_coeff, entropy_coeff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{check_gradient, gradcheck::FD_STEP, softmax};

    fn sample(action: usize, blp: f64, adv: f64, ret: f64) -> Sample<'static> {
        Sample { observation: &[], action, behavior_log_prob: blp, advantage: adv, target_return: ret }
    }

    fn logit_level_check(objective: Objective, logits: &[f64], s: &Sample<'_>) {
        let t = sample_terms(objective, logits, 0.3, s, 0.5, 0.01).unwrap();
        let total = |z: &[f64]| {
            let t = sample_terms(objective, z, 0.3, s, 0.5, 0.01).unwrap();
            t.policy - 0.01 * t.entropy
        };
        let r = check_gradient(logits, &t.d_logits, total, FD_STEP, 1e-6);
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn logit_gradients_match_finite_differences() {
        let logits = [0.3f64, -1.1, 0.8];
        let lp = softmax(&logits).unwrap()[1].ln();
        logit_level_check(Objective::A2c, &logits, &sample(1, lp, 0.7, 0.0));
        // ratio 1, unclipped
        logit_level_check(Objective::Ppo { clip: 0.2 }, &logits, &sample(1, lp, -0.4, 0.0));
        // ratio well above the clip range with positive advantage: clipped
        logit_level_check(Objective::Ppo { clip: 0.2 }, &logits, &sample(1, lp - 0.7, 1.3, 0.0));
        // ratio above the range with negative advantage: unclipped branch wins
        logit_level_check(Objective::Ppo { clip: 0.2 }, &logits, &sample(2, lp - 0.9, -1.3, 0.0));
    }

    #[test]
    fn ratio_one_makes_clipped_and_unclipped_equal() {
        let logits = [0.2f64, 0.4];
        let lp = softmax(&logits).unwrap()[0].ln();
        let t = sample_terms(Objective::Ppo { clip: 0.1 }, &logits, 0.0, &sample(0, lp, 2.0, 0.0), 0.5, 0.0).unwrap();
        let a2c_like = -(2.0f64);
        assert!((t.policy - a2c_like).abs() < 1e-12);
        assert!(!t.clipped);
    }

    #[test]
    fn entropy_gradient_points_toward_uniform() {
        // zero advantage isolates the entropy term; gradient descent must raise the smaller logit
        let logits = [2.0, -1.0];
        let t = sample_terms(Objective::A2c, &logits, 0.0, &sample(0, 0.0, 0.0, 0.0), 0.0, 1.0).unwrap();
        assert!(t.d_logits[0] > 0.0 && t.d_logits[1] < 0.0);
        let stepped: Vec<f64> = logits.iter().zip(&t.d_logits).map(|(z, g)| z - 0.1 * g).collect();
        let h0 = entropy(&softmax(&logits).unwrap());
        let h1 = entropy(&softmax(&stepped).unwrap());
        assert!(h1 > h0);
    }

    #[test]
    fn zero_advantage_exact_value_leaves_only_entropy() {
        let logits = [0.5, -0.2, 0.1];
        let t = sample_terms(Objective::A2c, &logits, 1.5, &sample(2, 0.0, 0.0, 1.5), 0.5, 0.0).unwrap();
        assert!(t.d_logits.iter().all(|&g| g == 0.0));
        assert_eq!(t.d_value, 0.0);
    }
}
