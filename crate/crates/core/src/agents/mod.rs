//! PPO and A2C learners with exploration hooks at the reward, the
//! pre-softmax policy output, and the policy parameters.

pub mod a2c;
pub mod losses;
pub mod policy;
pub mod ppo;
pub mod rollout;
pub mod trainer;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Activation;

pub use a2c::a2c_update;
pub use losses::{a2c_batch_loss, ppo_batch_loss, BatchLoss, Sample};
pub use policy::{act, ActOutcome};
pub use ppo::{normalize_advantages, ppo_update};
pub use rollout::{gae_advantages, Collector, CompletedEpisode, Rollout};
pub use trainer::{derive_seed, Learner, Trainer, UpdateStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpoConfig {
    pub horizon: usize,
    /// Initial Adam step size, multiplied by the annealing factor.
    pub step_size: f64,
    pub epochs: usize,
    /// Number of minibatches each epoch is split into.
    pub minibatches: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub n_actors: usize,
    /// Initial clipping range, multiplied by the annealing factor.
    pub clip: f64,
    pub value_coeff: f64,
    pub entropy_coeff: f64,
    /// Linear decay of step size and clip range from 1 to 0 over training.
    pub anneal: bool,
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            horizon: 128,
            step_size: 2.5e-4,
            epochs: 4,
            minibatches: 4,
            gamma: 0.99,
            lambda: 0.95,
            n_actors: 8,
            clip: 0.1,
            value_coeff: 0.5,
            entropy_coeff: 0.01,
            anneal: true,
            hidden: vec![64, 64],
            activation: Activation::Tanh,
        }
    }
}

impl PpoConfig {
    /// Annealing factor `alpha = 1 - progress`.
    pub fn alpha(&self, progress: f64) -> f64 {
        if self.anneal {
            1.0 - progress.clamp(0.0, 1.0)
        } else {
            1.0
        }
    }

    /// `(step size, clip range)` at training progress `progress` in `[0, 1]`.
    pub fn annealed(&self, progress: f64) -> (f64, f64) {
        let alpha = self.alpha(progress);
        (self.step_size * alpha, self.clip * alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.epochs == 0 || self.minibatches == 0 || self.n_actors == 0 {
            return Err(Error::config("PPO horizon, epochs, minibatches and actors must be positive"));
        }
        if self.minibatches > self.horizon * self.n_actors {
            return Err(Error::config("more minibatches than samples per rollout"));
        }
        check_common(self.step_size, self.gamma, self.value_coeff, self.entropy_coeff, &self.hidden)?;
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::config("GAE lambda must lie in [0, 1]"));
        }
        if !(self.clip >= 0.0) {
            return Err(Error::config("clip range must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A2cConfig {
    /// n-step return horizon per actor.
    pub horizon: usize,
    pub gamma: f64,
    pub entropy_coeff: f64,
    pub value_coeff: f64,
    pub step_size: f64,
    pub n_actors: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Default for A2cConfig {
    fn default() -> Self {
        Self {
            horizon: 8,
            gamma: 0.99,
            entropy_coeff: 0.01,
            value_coeff: 0.5,
            step_size: 7e-4,
            n_actors: 8,
            hidden: vec![128, 128],
            activation: Activation::Tanh,
        }
    }
}

impl A2cConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.n_actors == 0 {
            return Err(Error::config("A2C horizon and actor count must be positive"));
        }
        check_common(self.step_size, self.gamma, self.value_coeff, self.entropy_coeff, &self.hidden)
    }
}

fn check_common(step_size: f64, gamma: f64, value_coeff: f64, entropy_coeff: f64, hidden: &[usize]) -> Result<()> {
    if !(step_size >= 0.0) || !step_size.is_finite() {
        return Err(Error::config("step size must be a nonnegative number"));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::config("discount must lie in [0, 1]"));
    }
    if !(value_coeff >= 0.0) || !(entropy_coeff >= 0.0) {
        return Err(Error::config("loss coefficients must be nonnegative"));
    }
    if hidden.contains(&0) {
        return Err(Error::config("hidden layer widths must be positive"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AgentConfig {
    Ppo(PpoConfig),
    A2c(A2cConfig),
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig::Ppo(PpoConfig::default())
    }
}

impl AgentConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            AgentConfig::Ppo(_) => "ppo",
            AgentConfig::A2c(_) => "a2c",
        }
    }

    pub fn horizon(&self) -> usize {
        match self {
            AgentConfig::Ppo(c) => c.horizon,
            AgentConfig::A2c(c) => c.horizon,
        }
    }

    pub fn n_actors(&self) -> usize {
        match self {
            AgentConfig::Ppo(c) => c.n_actors,
            AgentConfig::A2c(c) => c.n_actors,
        }
    }

    pub fn hidden(&self) -> &[usize] {
        match self {
            AgentConfig::Ppo(c) => &c.hidden,
            AgentConfig::A2c(c) => &c.hidden,
        }
    }

    pub fn activation(&self) -> Activation {
        match self {
            AgentConfig::Ppo(c) => c.activation,
            AgentConfig::A2c(c) => c.activation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AgentConfig::Ppo(c) => c.validate(),
            AgentConfig::A2c(c) => c.validate(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annealing_halves_at_midpoint() {
        let c = PpoConfig::default();
        let (lr, clip) = c.annealed(0.5);
        assert_eq!(lr, c.step_size / 2.0);
        assert_eq!(clip, c.clip / 2.0);
        assert_eq!(c.annealed(1.0), (0.0, 0.0));
        assert_eq!(c.annealed(0.0), (2.5e-4, 0.1));
        let flat = PpoConfig { anneal: false, ..c };
        assert_eq!(flat.annealed(0.7), (2.5e-4, 0.1));
    }

    #[test]
    fn table_defaults() {
        let c = PpoConfig::default();
        assert_eq!((c.horizon, c.epochs, c.minibatches, c.n_actors), (128, 4, 4, 8));
        assert_eq!((c.gamma, c.lambda, c.value_coeff, c.entropy_coeff), (0.99, 0.95, 0.5, 0.01));
        assert!(c.validate().is_ok());
        assert!(A2cConfig::default().validate().is_ok());
        assert_eq!(A2cConfig::default().hidden, vec![128, 128]);
    }

    #[test]
    fn invalid_configs() {
        assert!(PpoConfig { horizon: 0, ..Default::default() }.validate().is_err());
        assert!(PpoConfig { lambda: 1.5, ..Default::default() }.validate().is_err());
        assert!(A2cConfig { gamma: -0.1, ..Default::default() }.validate().is_err());
    }
}
