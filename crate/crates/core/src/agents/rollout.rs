use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::policy::act;
use super::trainer::derive_seed;
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::exploration::{count_bonus, perturb_parameters, sporadic_bonus, CountModel, ExplorationConfig, NoveltyModels};
use crate::numerics::MlpNetwork;

/// Fixed-horizon batch of transitions from `n_actors` environments.
///
/// Per-step arrays are laid out time-major: step `t` of actor `i` lives at
/// index `t * n_actors + i`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Rollout {
    pub n_actors: usize,
    pub horizon: usize,
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub behavior_log_probs: Vec<f64>,
    /// Shaping factors drawn at each step, if any.
    pub epsilons: Vec<Option<Vec<f64>>>,
    pub rewards_ext: Vec<f64>,
    /// Reward the learner trains on (extrinsic plus any bonus).
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    /// Value of the successor observation; for a truncated step this is the
    /// value of the final observation, not of the next episode's start.
    pub next_values: Vec<f64>,
    pub terminated: Vec<bool>,
    pub truncated: Vec<bool>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Rollout {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn index(&self, t: usize, actor: usize) -> usize {
        t * self.n_actors + actor
    }

    fn check(&self) -> Result<()> {
        let n = self.horizon * self.n_actors;
        let lens = [
            self.observations.len(),
            self.actions.len(),
            self.behavior_log_probs.len(),
            self.epsilons.len(),
            self.rewards_ext.len(),
            self.rewards.len(),
            self.values.len(),
            self.next_values.len(),
            self.terminated.len(),
            self.truncated.len(),
        ];
        if lens.iter().any(|&l| l != n) {
            return Err(Error::config(format!("rollout arrays do not all have length {n}: {lens:?}")));
        }
        Ok(())
    }
}

/// Generalized advantage estimation on the learner rewards.
///
/// `delta_t = r_t + gamma V(s_{t+1}) (1 - terminated_t) - V(s_t)` and
/// `A_t = delta_t + gamma lambda A_{t+1}`, with the recursion cut at every
/// episode boundary (terminated or truncated). Return targets are `A_t + V(s_t)`.
pub fn gae_advantages(rollout: &mut Rollout, gamma: f64, lambda: f64) -> Result<()> {
    rollout.check()?;
    let n = rollout.len();
    rollout.advantages = vec![0.0; n];
    rollout.returns = vec![0.0; n];
    for actor in 0..rollout.n_actors {
        let mut next_adv = 0.0;
        for t in (0..rollout.horizon).rev() {
            let i = rollout.index(t, actor);
            let nonterminal = if rollout.terminated[i] { 0.0 } else { 1.0 };
            let delta = rollout.rewards[i] + gamma * rollout.next_values[i] * nonterminal - rollout.values[i];
            let carry = if rollout.terminated[i] || rollout.truncated[i] { 0.0 } else { next_adv };
            let adv = delta + gamma * lambda * carry;
            if !adv.is_finite() {
                return Err(Error::Numerical(format!("non-finite advantage at step {t}, actor {actor}")));
            }
            rollout.advantages[i] = adv;
            rollout.returns[i] = adv + rollout.values[i];
            next_adv = adv;
        }
    }
    Ok(())
}

/// Summary of a finished training episode.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletedEpisode {
    pub actor: usize,
    /// Global environment step count when the episode ended.
    pub global_step: u64,
    pub return_ext: f64,
    pub return_learner: f64,
    pub length: usize,
}

struct ActorSlot {
    env: Box<dyn Environment>,
    observation: Vec<f64>,
    episodes_started: u64,
    return_ext: f64,
    return_learner: f64,
    length: usize,
}

/// Steps a fixed set of environments, applies the configured exploration
/// mechanism, and owns the novelty state (counts and novelty networks).
pub struct Collector {
    actors: Vec<ActorSlot>,
    env_seed: u64,
    rng: ChaCha8Rng,
    pub counts: CountModel,
    pub novelty: Option<NoveltyModels<f64>>,
    explore: ExplorationConfig,
    global_step: u64,
    completed: Vec<CompletedEpisode>,
}

impl Collector {
    pub fn new(envs: Vec<Box<dyn Environment>>, explore: ExplorationConfig, seed: u64) -> Result<Self> {
        explore.validate()?;
        let first = envs.first().ok_or_else(|| Error::config("at least one actor is required"))?;
        let (obs_dim, n_actions) = (first.obs_dim(), first.n_actions());
        if envs.iter().any(|e| e.obs_dim() != obs_dim || e.n_actions() != n_actions) {
            return Err(Error::config("all actors must use the same environment shape"));
        }
        let novelty = match explore.novelty_config() {
            Some(cfg) => Some(NoveltyModels::new(obs_dim, n_actions, cfg, derive_seed(seed, 3))?),
            None => None,
        };
        let env_seed = derive_seed(seed, 4);
        let actors = envs
            .into_iter()
            .enumerate()
            .map(|(i, mut env)| {
                let observation = env.reset(derive_seed(env_seed, (i as u64) << 32));
                ActorSlot { env, observation, episodes_started: 1, return_ext: 0.0, return_learner: 0.0, length: 0 }
            })
            .collect();
        Ok(Self {
            actors,
            env_seed,
            rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, 5)),
            counts: CountModel::new(),
            novelty,
            explore,
            global_step: 0,
            completed: Vec::new(),
        })
    }

    pub fn n_actors(&self) -> usize {
        self.actors.len()
    }

    pub fn obs_dim(&self) -> usize {
        self.actors[0].env.obs_dim()
    }

    pub fn n_actions(&self) -> usize {
        self.actors[0].env.n_actions()
    }

    pub fn global_step(&self) -> u64 {
        self.global_step
    }

    pub fn explore(&self) -> &ExplorationConfig {
        &self.explore
    }

    /// Episodes finished since the last call.
    pub fn drain_completed(&mut self) -> Vec<CompletedEpisode> {
        std::mem::take(&mut self.completed)
    }

    /// Runs every actor for `horizon` steps. `progress` in `[0, 1]` drives
    /// any scheduled bonus scale.
    pub fn collect(
        &mut self,
        policy: &MlpNetwork<f64>,
        value: &MlpNetwork<f64>,
        horizon: usize,
        progress: f64,
    ) -> Result<Rollout> {
        if horizon == 0 {
            return Err(Error::config("rollout horizon must be positive"));
        }
        let n_actors = self.actors.len();
        let n = horizon * n_actors;
        let mut ro = Rollout { n_actors, horizon, ..Default::default() };
        ro.next_values = vec![f64::NAN; n];
        let shape = self.explore.shape_config();
        let noisy;
        let behavior = match &self.explore {
            ExplorationConfig::ParamNoise { sigma } => {
                noisy = perturb_parameters(policy, *sigma, &mut self.rng);
                &noisy
            }
            _ => policy,
        };

        for t in 0..horizon {
            for i in 0..n_actors {
                let obs = self.actors[i].observation.clone();
                let out = act(behavior, value, &obs, &shape, self.novelty.as_ref(), &mut self.rng, false)?;
                let step = self.actors[i].env.step(out.action)?;
                self.global_step += 1;
                let bonus = self.bonus(&obs, out.action, &step.observation, i, progress)?;
                if let (ExplorationConfig::StructuredShaping { .. }, Some(models)) = (&self.explore, self.novelty.as_mut()) {
                    models.train_autoencoder(&obs, out.action)?;
                }
                let learner_reward = step.reward_ext + bonus;

                // the previous step of this actor bootstraps from this step's value
                if t > 0 {
                    let prev = (t - 1) * n_actors + i;
                    if !(ro.terminated[prev] || ro.truncated[prev]) {
                        ro.next_values[prev] = out.value;
                    }
                }

                ro.observations.push(obs);
                ro.actions.push(out.action);
                ro.behavior_log_probs.push(out.behavior_log_prob);
                ro.epsilons.push(out.epsilon);
                ro.rewards_ext.push(step.reward_ext);
                ro.rewards.push(learner_reward);
                ro.values.push(out.value);
                ro.terminated.push(step.terminated);
                ro.truncated.push(step.truncated);

                let slot = &mut self.actors[i];
                slot.return_ext += step.reward_ext;
                slot.return_learner += learner_reward;
                slot.length += 1;
                let idx = t * n_actors + i;
                if step.done() {
                    ro.next_values[idx] = if step.terminated { 0.0 } else { value.predict(&step.observation)?[0] };
                    self.completed.push(CompletedEpisode {
                        actor: i,
                        global_step: self.global_step,
                        return_ext: slot.return_ext,
                        return_learner: slot.return_learner,
                        length: slot.length,
                    });
                    let seed = derive_seed(self.env_seed, ((i as u64) << 32) | slot.episodes_started);
                    slot.episodes_started += 1;
                    slot.observation = slot.env.reset(seed);
                    slot.return_ext = 0.0;
                    slot.return_learner = 0.0;
                    slot.length = 0;
                } else {
                    slot.observation = step.observation;
                }
            }
        }
        for i in 0..n_actors {
            let idx = (horizon - 1) * n_actors + i;
            if ro.next_values[idx].is_nan() {
                ro.next_values[idx] = value.predict(&self.actors[i].observation)?[0];
            }
        }
        Ok(ro)
    }

    fn bonus(&mut self, obs: &[f64], action: usize, next_obs: &[f64], actor: usize, progress: f64) -> Result<f64> {
        match &self.explore {
            ExplorationConfig::SporadicRewards(cfg) => Ok(sporadic_bonus(cfg, progress, &mut self.rng)),
            ExplorationConfig::CountBonus { beta, density_form } => {
                let key = self.actors[actor].env.state_key(next_obs);
                let n: f64 = self.counts.count_estimate(&key, *density_form)?;
                self.counts.record_visit(&key);
                Ok(beta * count_bonus(n.max(0.0))?)
            }
            ExplorationConfig::PredictionBonus { beta, .. } => {
                let models = self.novelty.as_mut().expect("novelty models exist for prediction bonus");
                models.tick();
                Ok(beta * models.prediction_bonus(obs, action, next_obs)?)
            }
            _ => Ok(0.0),
        }
    }
}
