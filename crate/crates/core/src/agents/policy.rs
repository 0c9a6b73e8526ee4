use rand::Rng;

use crate::error::{Error, Result};
use crate::exploration::{shape_logits, sporadic_epsilons, NoveltyModels, PolicyShapeConfig, ShapeMode};
use crate::numerics::{argmax, softmax, MlpNetwork};

/// Result of one action selection.
#[derive(Debug, Clone, PartialEq)]
pub struct ActOutcome {
    pub action: usize,
    /// `log pi_b(action)` under the distribution the action was sampled from.
    pub behavior_log_prob: f64,
    /// Shaping factors used for this step; `None` when the unshaped softmax was used.
    pub epsilon: Option<Vec<f64>>,
    pub value: f64,
}

/// Behavior distribution for `logits`: plain softmax when `epsilon` is `None`,
/// the shaped pipeline otherwise.
pub fn behavior_distribution(logits: &[f64], epsilon: Option<&[f64]>) -> Result<Vec<f64>> {
    match epsilon {
        None => softmax(logits),
        Some(eps) => shape_logits(logits, eps),
    }
}

/// Inverse-CDF draw from `probs` with one uniform variate.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the total mass; take the last action with support
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Draws the shaping factors for one step according to `shape`.
pub fn draw_epsilon<R: Rng + ?Sized>(
    shape: &PolicyShapeConfig,
    observation: &[f64],
    n_actions: usize,
    models: Option<&NoveltyModels<f64>>,
    rng: &mut R,
) -> Result<Option<Vec<f64>>> {
    if shape.mode == ShapeMode::Off {
        return Ok(None);
    }
    if shape.apply_probability < 1.0 && rng.random::<f64>() >= shape.apply_probability {
        return Ok(None);
    }
    match shape.mode {
        ShapeMode::Off => unreachable!(),
        ShapeMode::Sporadic => Ok(Some(sporadic_epsilons(n_actions, shape.eta_max, rng))),
        ShapeMode::Structured => {
            let models = models.ok_or_else(|| Error::config("structured shaping requires novelty models"))?;
            Ok(Some(models.structured_epsilons(observation)?))
        }
    }
}

/// Selects an action for `observation`.
///
/// The logits are shaped per `shape` and the action is sampled from the
/// resulting behavior policy, whose log-probability is returned. With
/// `deterministic` set, the argmax of the raw logits is taken and no shaping
/// is applied.
pub fn act<R: Rng + ?Sized>(
    policy: &MlpNetwork<f64>,
    value: &MlpNetwork<f64>,
    observation: &[f64],
    shape: &PolicyShapeConfig,
    models: Option<&NoveltyModels<f64>>,
    rng: &mut R,
    deterministic: bool,
) -> Result<ActOutcome> {
    let logits = policy.predict(observation)?;
    let v = value.predict(observation)?[0];
    if deterministic {
        let probs = softmax(&logits)?;
        let action = argmax(&logits);
        return Ok(ActOutcome { action, behavior_log_prob: probs[action].ln(), epsilon: None, value: v });
    }
    let epsilon = draw_epsilon(shape, observation, logits.len(), models, rng)?;
    let probs = behavior_distribution(&logits, epsilon.as_deref())?;
    let action = sample_categorical(&probs, rng);
    Ok(ActOutcome { action, behavior_log_prob: probs[action].ln(), epsilon, value: v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Activation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn nets() -> (MlpNetwork<f64>, MlpNetwork<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        (
            MlpNetwork::new(&[3, 8, 4], Activation::Tanh, &mut rng).unwrap(),
            MlpNetwork::new(&[3, 8, 1], Activation::Tanh, &mut rng).unwrap(),
        )
    }

    #[test]
    fn deterministic_takes_argmax() {
        let (p, v) = nets();
        let obs = [0.2, -0.7, 1.3];
        let out = act(&p, &v, &obs, &PolicyShapeConfig::default(), None, &mut ChaCha8Rng::seed_from_u64(1), true).unwrap();
        assert_eq!(out.action, argmax(&p.predict(&obs).unwrap()));
        assert_eq!(out.value, v.predict(&obs).unwrap()[0]);
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let (p, v) = nets();
        let shape = PolicyShapeConfig { mode: ShapeMode::Sporadic, ..Default::default() };
        let run = || act(&p, &v, &[0.1, 0.2, 0.3], &shape, None, &mut ChaCha8Rng::seed_from_u64(9), false).unwrap();
        assert_eq!(run(), run());
    }

    #[test]
    fn behavior_log_prob_matches_recomputation() {
        let (p, v) = nets();
        let shape = PolicyShapeConfig { mode: ShapeMode::Sporadic, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for i in 0..50 {
            let obs = [i as f64 * 0.1, -0.5, 0.25];
            let out = act(&p, &v, &obs, &shape, None, &mut rng, false).unwrap();
            let eps = out.epsilon.clone().unwrap();
            let logits = p.predict(&obs).unwrap();
            let shaped = shape_logits(&logits, &eps).unwrap();
            assert_eq!(out.behavior_log_prob, shaped[out.action].ln());
            let unshaped = softmax(&logits).unwrap();
            assert_ne!(out.behavior_log_prob, unshaped[out.action].ln());
        }
    }

    #[test]
    fn forced_uniform_eps_matches_zero_eps() {
        let logits = [0.4, -1.2, 2.0, 0.0];
        let zero = behavior_distribution(&logits, Some(&[0.0; 4])).unwrap();
        let uniform = behavior_distribution(&logits, Some(&[0.37; 4])).unwrap();
        for (a, b) in zero.iter().zip(&uniform) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn apply_probability_zero_never_shapes() {
        let (p, v) = nets();
        let shape = PolicyShapeConfig { mode: ShapeMode::Sporadic, apply_probability: 0.0, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            assert!(act(&p, &v, &[0.0, 0.0, 0.0], &shape, None, &mut rng, false).unwrap().epsilon.is_none());
        }
    }

    #[test]
    fn structured_without_models_is_error() {
        let (p, v) = nets();
        let shape = PolicyShapeConfig { mode: ShapeMode::Structured, ..Default::default() };
        assert!(act(&p, &v, &[0.0; 3], &shape, None, &mut ChaCha8Rng::seed_from_u64(0), false).is_err());
    }

    #[test]
    fn categorical_sampling_frequencies() {
        let probs = [0.1, 0.6, 0.3];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts = [0usize; 3];
        for _ in 0..30_000 {
            counts[sample_categorical(&probs, &mut rng)] += 1;
        }
        for (c, p) in counts.iter().zip(probs) {
            assert!((*c as f64 / 30_000.0 - p).abs() < 0.01);
        }
    }
}
