//! Sporadic random reward bonuses.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BetaSchedule {
    #[default]
    Constant,
    /// `beta` falls linearly to zero over the run.
    LinearDecay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardPerturbConfig {
    /// Probability that a step receives a bonus.
    pub probability: f64,
    pub beta: f64,
    /// Bonus magnitudes are uniform on `[0, bonus_max]`.
    pub bonus_max: f64,
    pub schedule: BetaSchedule,
}

impl Default for RewardPerturbConfig {
    fn default() -> Self {
        Self { probability: 0.5, beta: 1.0, bonus_max: 0.1, schedule: BetaSchedule::Constant }
    }
}

impl RewardPerturbConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.probability) {
            return Err(Error::config("reward bonus probability must lie in [0, 1]"));
        }
        if !(self.bonus_max > 0.0) || !self.bonus_max.is_finite() {
            return Err(Error::config("bonus_max must be positive"));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::config("beta must be nonnegative"));
        }
        Ok(())
    }

    /// Effective scale at training progress `progress` in `[0, 1]`.
    pub fn beta_at(&self, progress: f64) -> f64 {
        match self.schedule {
            BetaSchedule::Constant => self.beta,
            BetaSchedule::LinearDecay => self.beta * (1.0 - progress.clamp(0.0, 1.0)),
        }
    }
}

/// Draws the additive bonus for one step: `beta * eta` when the trigger
/// `nu ~ U[0, 1)` satisfies `nu >= 1 - p`, zero otherwise.
pub fn sporadic_bonus<T: Scalar, R: Rng + ?Sized>(cfg: &RewardPerturbConfig, progress: f64, rng: &mut R) -> T {
    let nu: f64 = rng.random();
    if nu >= 1.0 - cfg.probability && cfg.probability > 0.0 {
        let eta = rng.random_range(0.0..=cfg.bonus_max);
        T::lit(cfg.beta_at(progress) * eta)
    } else {
        T::zero()
    }
}

/// Reward seen by the learner. Logged returns keep using `r_ext`.
pub fn perturb_reward<T: Scalar, R: Rng + ?Sized>(r_ext: T, cfg: &RewardPerturbConfig, rng: &mut R) -> T {
    r_ext + sporadic_bonus(cfg, 0.0, rng)
}
