use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::a2c::a2c_update;
use super::losses::BatchLoss;
use super::ppo::ppo_update;
use super::rollout::{gae_advantages, Collector, CompletedEpisode, Rollout};
use super::AgentConfig;
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::exploration::ExplorationConfig;
use crate::numerics::{argmax, softmax, AdamState, MlpNetwork};

/// Splitmix64 mix of a base seed and a stream id, giving independent
/// deterministic seeds for every random stream of a run.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Loss statistics averaged over the gradient steps of one update.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UpdateStats {
    pub loss: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub gradient_steps: usize,
}

impl UpdateStats {
    pub(crate) fn record(&mut self, l: &BatchLoss) {
        self.loss += l.loss;
        self.policy_loss += l.policy_loss;
        self.value_loss += l.value_loss;
        self.entropy += l.entropy;
        self.clip_fraction += l.clip_fraction;
        self.gradient_steps += 1;
    }

    pub(crate) fn finish(&mut self) {
        if self.gradient_steps > 0 {
            let k = self.gradient_steps as f64;
            self.loss /= k;
            self.policy_loss /= k;
            self.value_loss /= k;
            self.entropy /= k;
            self.clip_fraction /= k;
        }
    }
}

/// Separate policy and value networks with their optimizers.
#[derive(Debug, Clone)]
pub struct Learner {
    pub cfg: AgentConfig,
    pub policy: MlpNetwork<f64>,
    pub value: MlpNetwork<f64>,
    policy_opt: AdamState<f64>,
    value_opt: AdamState<f64>,
    rng: ChaCha8Rng,
}

impl Learner {
    pub fn new(cfg: AgentConfig, obs_dim: usize, n_actions: usize, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut init = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
        let sizes = |out: usize| {
            std::iter::once(obs_dim).chain(cfg.hidden().iter().copied()).chain(std::iter::once(out)).collect::<Vec<_>>()
        };
        let policy = MlpNetwork::new(&sizes(n_actions), cfg.activation(), &mut init)?;
        let value = MlpNetwork::new(&sizes(1), cfg.activation(), &mut init)?;
        let step = match &cfg {
            AgentConfig::Ppo(c) => c.step_size,
            AgentConfig::A2c(c) => c.step_size,
        };
        Ok(Self {
            policy_opt: AdamState::new(policy.num_params(), step),
            value_opt: AdamState::new(value.num_params(), step),
            policy,
            value,
            cfg,
            rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, 2)),
        })
    }

    /// Computes advantages on `rollout` and applies the configured update.
    pub fn update(&mut self, rollout: &mut Rollout, progress: f64) -> Result<UpdateStats> {
        match &self.cfg {
            AgentConfig::Ppo(c) => {
                gae_advantages(rollout, c.gamma, c.lambda)?;
                ppo_update(
                    &mut self.policy,
                    &mut self.value,
                    &mut self.policy_opt,
                    &mut self.value_opt,
                    rollout,
                    c,
                    progress,
                    &mut self.rng,
                )
            }
            AgentConfig::A2c(c) => {
                gae_advantages(rollout, c.gamma, 1.0)?;
                a2c_update(&mut self.policy, &mut self.value, &mut self.policy_opt, &mut self.value_opt, rollout, c)
            }
        }
    }

    /// Unshaped action distribution.
    pub fn action_probs(&self, observation: &[f64]) -> Result<Vec<f64>> {
        softmax(&self.policy.predict(observation)?)
    }

    pub fn greedy_action(&self, observation: &[f64]) -> Result<usize> {
        Ok(argmax(&self.policy.predict(observation)?))
    }
}

/// Collect-then-update loop for one seed.
pub struct Trainer {
    pub learner: Learner,
    pub collector: Collector,
    total_steps: u64,
}

impl Trainer {
    pub fn new(
        envs: Vec<Box<dyn Environment>>,
        agent: AgentConfig,
        explore: ExplorationConfig,
        total_steps: u64,
        seed: u64,
    ) -> Result<Self> {
        agent.validate()?;
        if envs.len() != agent.n_actors() {
            return Err(Error::config(format!(
                "agent expects {} actors, {} environments given",
                agent.n_actors(),
                envs.len()
            )));
        }
        if total_steps < agent.horizon() as u64 {
            return Err(Error::config(format!(
                "total steps {total_steps} is shorter than the horizon {}",
                agent.horizon()
            )));
        }
        let collector = Collector::new(envs, explore, seed)?;
        let learner = Learner::new(agent, collector.obs_dim(), collector.n_actions(), seed)?;
        Ok(Self { learner, collector, total_steps })
    }

    /// Builds `n_actors` copies of the environment named by `env_id`.
    pub fn from_env_id(env_id: &str, agent: AgentConfig, explore: ExplorationConfig, total_steps: u64, seed: u64) -> Result<Self> {
        let envs = (0..agent.n_actors()).map(|_| crate::envs::make_env(env_id)).collect::<Result<Vec<_>>>()?;
        Self::new(envs, agent, explore, total_steps, seed)
    }

    pub fn total_steps(&self) -> u64 {
        self.total_steps
    }

    pub fn global_step(&self) -> u64 {
        self.collector.global_step()
    }

    pub fn progress(&self) -> f64 {
        (self.global_step() as f64 / self.total_steps as f64).min(1.0)
    }

    pub fn is_done(&self) -> bool {
        self.global_step() >= self.total_steps
    }

    /// Collects one rollout with the current policy; finished episodes are
    /// available from `collector.drain_completed()` before any update runs.
    pub fn collect_rollout(&mut self, progress: f64) -> Result<Rollout> {
        let horizon = self.learner.cfg.horizon();
        self.collector.collect(&self.learner.policy, &self.learner.value, horizon, progress)
    }

    /// One rollout and one update; returns the episodes that finished.
    pub fn iterate(&mut self) -> Result<(UpdateStats, Vec<CompletedEpisode>)> {
        let progress = self.progress();
        let mut rollout = self.collect_rollout(progress)?;
        let stats = self.learner.update(&mut rollout, progress)?;
        Ok((stats, self.collector.drain_completed()))
    }

    /// Trains until the step budget is used, reporting every finished episode.
    pub fn run<F: FnMut(&CompletedEpisode) -> Result<()>>(&mut self, mut on_episode: F) -> Result<()> {
        while !self.is_done() {
            let (_, episodes) = self.iterate()?;
            for ep in &episodes {
                on_episode(ep)?;
            }
        }
        Ok(())
    }
}
