//! Exploration mechanisms, each acting at one insertion point of the learner:
//! the reward (sporadic bonuses, count bonuses, prediction bonuses), the
//! pre-softmax policy output (sporadic and structured shaping), or the policy
//! parameters (parameter noise).

pub mod counts;
pub mod novelty;
pub mod param_noise;
pub mod reward;
pub mod shaping;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use counts::{count_bonus, pseudo_count, CountModel, DensityForm};
pub use novelty::{EncoderKind, NoveltyConfig, NoveltyModels};
pub use param_noise::perturb_parameters;
pub use reward::{perturb_reward, sporadic_bonus, BetaSchedule, RewardPerturbConfig};
pub use shaping::{shape_logits, sporadic_epsilons, PolicyShapeConfig, ShapeMode};

/// The single exploration mechanism used by a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExplorationConfig {
    #[default]
    None,
    SporadicRewards(RewardPerturbConfig),
    SporadicShaping(PolicyShapeConfig),
    StructuredShaping {
        shape: PolicyShapeConfig,
        novelty: NoveltyConfig,
    },
    CountBonus {
        beta: f64,
        density_form: DensityForm,
    },
    PredictionBonus {
        beta: f64,
        novelty: NoveltyConfig,
    },
    ParamNoise {
        sigma: f64,
    },
}

impl ExplorationConfig {
    pub const KINDS: [&'static str; 7] = [
        "none",
        "sporadic-rewards",
        "sporadic-shaping",
        "structured-shaping",
        "count-bonus",
        "prediction-bonus",
        "param-noise",
    ];

    pub fn kind(&self) -> &'static str {
        match self {
            ExplorationConfig::None => "none",
            ExplorationConfig::SporadicRewards(_) => "sporadic-rewards",
            ExplorationConfig::SporadicShaping(_) => "sporadic-shaping",
            ExplorationConfig::StructuredShaping { .. } => "structured-shaping",
            ExplorationConfig::CountBonus { .. } => "count-bonus",
            ExplorationConfig::PredictionBonus { .. } => "prediction-bonus",
            ExplorationConfig::ParamNoise { .. } => "param-noise",
        }
    }

    /// Shaping applied when acting; mode `Off` for non-shaping kinds.
    pub fn shape_config(&self) -> PolicyShapeConfig {
        match self {
            ExplorationConfig::SporadicShaping(c) => PolicyShapeConfig { mode: ShapeMode::Sporadic, ..c.clone() },
            ExplorationConfig::StructuredShaping { shape, .. } => {
                PolicyShapeConfig { mode: ShapeMode::Structured, ..shape.clone() }
            }
            _ => PolicyShapeConfig::default(),
        }
    }

    /// Novelty networks needed by this mechanism, if any.
    pub fn novelty_config(&self) -> Option<&NoveltyConfig> {
        match self {
            ExplorationConfig::StructuredShaping { novelty, .. } | ExplorationConfig::PredictionBonus { novelty, .. } => {
                Some(novelty)
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ExplorationConfig::None => Ok(()),
            ExplorationConfig::SporadicRewards(c) => c.validate(),
            ExplorationConfig::SporadicShaping(c) => c.validate(),
            ExplorationConfig::StructuredShaping { shape, novelty } => {
                shape.validate()?;
                novelty.validate()
            }
            ExplorationConfig::CountBonus { beta, .. } | ExplorationConfig::PredictionBonus { beta, .. }
                if !(*beta >= 0.0) =>
            {
                Err(Error::config("bonus scale beta must be nonnegative"))
            }
            ExplorationConfig::CountBonus { .. } => Ok(()),
            ExplorationConfig::PredictionBonus { novelty, .. } => novelty.validate(),
            ExplorationConfig::ParamNoise { sigma } if !(*sigma >= 0.0) => {
                Err(Error::config("parameter noise sigma must be nonnegative"))
            }
            ExplorationConfig::ParamNoise { .. } => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_round_trip_through_serde() {
        let cfgs = [
            ExplorationConfig::None,
            ExplorationConfig::SporadicRewards(RewardPerturbConfig::default()),
            ExplorationConfig::SporadicShaping(PolicyShapeConfig::default()),
            ExplorationConfig::StructuredShaping { shape: PolicyShapeConfig::default(), novelty: NoveltyConfig::default() },
            ExplorationConfig::CountBonus { beta: 0.1, density_form: DensityForm::Recoding },
            ExplorationConfig::PredictionBonus { beta: 0.1, novelty: NoveltyConfig::default() },
            ExplorationConfig::ParamNoise { sigma: 0.05 },
        ];
        for (c, name) in cfgs.iter().zip(ExplorationConfig::KINDS) {
            assert_eq!(c.kind(), name);
            let json = serde_json::to_value(c).unwrap();
            assert_eq!(json["kind"], name);
            assert_eq!(&serde_json::from_value::<ExplorationConfig>(json).unwrap(), c);
            assert!(c.validate().is_ok());
        }
    }

    #[test]
    fn shape_mode_follows_kind() {
        assert_eq!(ExplorationConfig::None.shape_config().mode, ShapeMode::Off);
        let s = ExplorationConfig::SporadicShaping(PolicyShapeConfig::default());
        assert_eq!(s.shape_config().mode, ShapeMode::Sporadic);
        assert!(ExplorationConfig::ParamNoise { sigma: -1.0 }.validate().is_err());
    }
}
