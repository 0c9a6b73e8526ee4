//! Learned novelty signals: a state-action autoencoder whose reconstruction
//! errors give structured shaping factors, and a forward dynamics model whose
//! prediction error gives a decaying intrinsic reward.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Activation, AdamState, MlpNetwork};
use crate::scalar::Scalar;

/// Below this total reconstruction error the shaping factors fall back to uniform.
pub const MIN_TOTAL_ERROR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderKind {
    /// Raw observations.
    #[default]
    Identity,
    /// A frozen, randomly initialized network.
    RandomNetwork,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoveltyConfig {
    pub autoencoder_hidden: Vec<usize>,
    pub forward_hidden: Vec<usize>,
    pub encoder: EncoderKind,
    /// Output width of the random encoder.
    pub encoding_dim: usize,
    pub step_size: f64,
    /// Decay constant `C` of the prediction bonus `e / (t C)`.
    pub decay_c: f64,
}

impl Default for NoveltyConfig {
    fn default() -> Self {
        Self {
            autoencoder_hidden: vec![16, 4, 16],
            forward_hidden: vec![32],
            encoder: EncoderKind::Identity,
            encoding_dim: 16,
            step_size: 1e-3,
            decay_c: 1e-3,
        }
    }
}

impl NoveltyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) {
            return Err(Error::config("novelty model step size must be positive"));
        }
        if !(self.decay_c > 0.0) {
            return Err(Error::config("decay constant must be positive"));
        }
        if self.encoding_dim == 0 || self.autoencoder_hidden.contains(&0) || self.forward_hidden.contains(&0) {
            return Err(Error::config("novelty network widths must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct NoveltyModels<T> {
    pub autoencoder: MlpNetwork<T>,
    autoencoder_opt: AdamState<T>,
    pub forward_model: MlpNetwork<T>,
    forward_opt: AdamState<T>,
    encoder: Option<MlpNetwork<T>>,
    pub decay_c: T,
    global_step: u64,
    obs_dim: usize,
    n_actions: usize,
}

fn with_hidden(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    std::iter::once(input).chain(hidden.iter().copied()).chain(std::iter::once(output)).collect()
}

fn squared_error<T: Scalar>(pred: &[T], target: &[T]) -> (T, Vec<T>) {
    let diff: Vec<T> = pred.iter().zip(target).map(|(&p, &t)| p - t).collect();
    let loss = diff.iter().map(|&d| d * d).sum();
    (loss, diff.into_iter().map(|d| d + d).collect())
}

impl<T: Scalar> NoveltyModels<T> {
    pub fn new(obs_dim: usize, n_actions: usize, cfg: &NoveltyConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if obs_dim == 0 || n_actions < 2 {
            return Err(Error::config("novelty models need a nonempty observation and at least two actions"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sa = obs_dim + n_actions;
        let autoencoder = MlpNetwork::new(&with_hidden(sa, &cfg.autoencoder_hidden, sa), Activation::Tanh, &mut rng)?;
        let encoder = match cfg.encoder {
            EncoderKind::Identity => None,
            EncoderKind::RandomNetwork => Some(MlpNetwork::new(
                &with_hidden(obs_dim, &[cfg.encoding_dim.max(16)], cfg.encoding_dim),
                Activation::Tanh,
                &mut rng,
            )?),
        };
        let phi_dim = encoder.as_ref().map_or(obs_dim, |e| e.output_size());
        let forward_model = MlpNetwork::new(
            &with_hidden(phi_dim + n_actions, &cfg.forward_hidden, phi_dim),
            Activation::Tanh,
            &mut rng,
        )?;
        let step = T::lit(cfg.step_size);
        Ok(Self {
            autoencoder_opt: AdamState::new(autoencoder.num_params(), step),
            forward_opt: AdamState::new(forward_model.num_params(), step),
            autoencoder,
            forward_model,
            encoder,
            decay_c: T::lit(cfg.decay_c),
            global_step: 0,
            obs_dim,
            n_actions,
        })
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn global_step(&self) -> u64 {
        self.global_step
    }

    /// Advances the global step counter `t` used by the prediction bonus.
    pub fn tick(&mut self) {
        self.global_step += 1;
    }

    fn check_obs(&self, s: &[T]) -> Result<()> {
        if s.len() != self.obs_dim {
            return Err(Error::config(format!("observation length {} != {}", s.len(), self.obs_dim)));
        }
        Ok(())
    }

    fn check_action(&self, a: usize) -> Result<()> {
        if a >= self.n_actions {
            return Err(Error::usage(format!("action {a} out of range for {} actions", self.n_actions)));
        }
        Ok(())
    }

    /// State features followed by a one-hot action.
    pub fn state_action(&self, s: &[T], a: usize) -> Vec<T> {
        let mut v = Vec::with_capacity(s.len() + self.n_actions);
        v.extend_from_slice(s);
        v.extend((0..self.n_actions).map(|i| if i == a { T::one() } else { T::zero() }));
        v
    }

    /// `phi(s)`
    pub fn encode(&self, s: &[T]) -> Result<Vec<T>> {
        self.check_obs(s)?;
        match &self.encoder {
            None => Ok(s.to_vec()),
            Some(net) => net.predict(s),
        }
    }

    /// `|f_a(s_a) - s_a|^2`
    pub fn encoding_error(&self, s: &[T], a: usize) -> Result<T> {
        self.check_obs(s)?;
        self.check_action(a)?;
        let sa = self.state_action(s, a);
        let out = self.autoencoder.predict(&sa)?;
        Ok(squared_error(&out, &sa).0)
    }

    /// Analytic reconstruction loss and parameter gradient for one pair.
    pub fn reconstruction_loss_and_grad(&self, s: &[T], a: usize) -> Result<(T, Vec<T>)> {
        self.check_obs(s)?;
        self.check_action(a)?;
        let sa = self.state_action(s, a);
        let (out, cache) = self.autoencoder.forward(&sa)?;
        let (loss, seed) = squared_error(&out, &sa);
        Ok((loss, self.autoencoder.backward(&cache, &seed)?))
    }

    /// One Adam step on the reconstruction loss of `(s, a)`; returns the loss before the step.
    pub fn train_autoencoder(&mut self, s: &[T], a: usize) -> Result<T> {
        let (loss, grad) = self.reconstruction_loss_and_grad(s, a)?;
        self.autoencoder_opt.step(self.autoencoder.params_mut(), &grad)?;
        Ok(loss)
    }

    /// Shaping factors `e_a / sum(e)`; uniform when every error vanishes.
    pub fn structured_epsilons(&self, s: &[T]) -> Result<Vec<T>> {
        let errors = (0..self.n_actions).map(|a| self.encoding_error(s, a)).collect::<Result<Vec<T>>>()?;
        let total: T = errors.iter().copied().sum();
        if !(total >= T::lit(MIN_TOTAL_ERROR)) {
            return Ok(vec![T::one() / T::lit(self.n_actions as f64); self.n_actions]);
        }
        Ok(errors.into_iter().map(|e| e / total).collect())
    }

    fn forward_input(&self, phi: &[T], a: usize) -> Vec<T> {
        let mut v = phi.to_vec();
        v.extend((0..self.n_actions).map(|i| if i == a { T::one() } else { T::zero() }));
        v
    }

    /// `|f(phi(s), a) - phi(s')|^2`
    pub fn prediction_error(&self, s: &[T], a: usize, s_next: &[T]) -> Result<T> {
        self.check_action(a)?;
        let input = self.forward_input(&self.encode(s)?, a);
        let target = self.encode(s_next)?;
        Ok(squared_error(&self.forward_model.predict(&input)?, &target).0)
    }

    /// Analytic forward-model loss and parameter gradient.
    pub fn prediction_loss_and_grad(&self, s: &[T], a: usize, s_next: &[T]) -> Result<(T, Vec<T>)> {
        self.check_action(a)?;
        let input = self.forward_input(&self.encode(s)?, a);
        let target = self.encode(s_next)?;
        let (out, cache) = self.forward_model.forward(&input)?;
        let (loss, seed) = squared_error(&out, &target);
        Ok((loss, self.forward_model.backward(&cache, &seed)?))
    }

    /// Intrinsic reward `e / (t C)` for the transition, followed by one
    /// training step of the forward model toward `phi(s')`.
    pub fn prediction_bonus(&mut self, s: &[T], a: usize, s_next: &[T]) -> Result<T> {
        if self.global_step == 0 {
            return Err(Error::Domain("prediction bonus needs global step t >= 1; call tick() first".into()));
        }
        let (error, grad) = self.prediction_loss_and_grad(s, a, s_next)?;
        let bonus = error / (T::lit(self.global_step as f64) * self.decay_c);
        self.forward_opt.step(self.forward_model.params_mut(), &grad)?;
        Ok(bonus)
    }
}
