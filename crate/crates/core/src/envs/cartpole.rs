//! Cart-pole swing-up with a sparse height reward.
//!
//! The pole angle is measured from upright (`theta = 0`), so the pole starts
//! hanging at `theta ≈ pi`. Reward 1 is emitted only while the pole is above
//! the height threshold and the cart is inside the track.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_action, Discretizer, Environment, StateKey, StepResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseCartPoleConfig {
    pub gravity: f64,
    pub cart_mass: f64,
    pub pole_mass: f64,
    pub pole_half_length: f64,
    pub force_magnitude: f64,
    pub timestep: f64,
    pub x_limit: f64,
    /// Reward requires `cos(theta) >= success_threshold`.
    pub success_threshold: f64,
    pub max_steps: usize,
    /// Half-width of the uniform noise on every initial state coordinate.
    pub init_noise: f64,
}

impl Default for SparseCartPoleConfig {
    fn default() -> Self {
        Self {
            gravity: 9.8,
            cart_mass: 1.0,
            pole_mass: 0.1,
            pole_half_length: 0.5,
            force_magnitude: 10.0,
            timestep: 0.02,
            x_limit: 2.4,
            success_threshold: 0.8,
            max_steps: 500,
            init_noise: 0.05,
        }
    }
}

impl SparseCartPoleConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.gravity,
            self.cart_mass,
            self.pole_mass,
            self.pole_half_length,
            self.force_magnitude,
            self.timestep,
            self.x_limit,
        ];
        if positive.iter().any(|&v| !(v > 0.0)) || self.max_steps == 0 {
            return Err(Error::config("cart-pole physical constants must be positive"));
        }
        if !(self.success_threshold > -1.0 && self.success_threshold < 1.0) {
            return Err(Error::config("success threshold must lie in (-1, 1)"));
        }
        if !(self.init_noise >= 0.0) {
            return Err(Error::config("initial noise must be nonnegative"));
        }
        Ok(())
    }
}

/// Physical state `(x, x_dot, theta, theta_dot)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CartPoleState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
}

/// Actions: 0 push left, 1 no force, 2 push right.
/// Observation: `[x, x_dot, cos(theta), sin(theta), theta_dot]`.
#[derive(Debug, Clone)]
pub struct SparseCartPole {
    cfg: SparseCartPoleConfig,
    state: CartPoleState,
    steps: usize,
    done: bool,
    grid: Discretizer,
}

impl SparseCartPole {
    pub const N_ACTIONS: usize = 3;
    pub const OBS_DIM: usize = 5;

    pub fn new(cfg: SparseCartPoleConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = Discretizer::new(
            vec![-cfg.x_limit, -5.0, -1.0, -1.0, -10.0],
            vec![cfg.x_limit, 5.0, 1.0, 1.0, 10.0],
            Discretizer::DEFAULT_BINS,
        );
        Ok(Self { cfg, state: CartPoleState::default(), steps: 0, done: true, grid })
    }

    pub fn config(&self) -> &SparseCartPoleConfig {
        &self.cfg
    }

    pub fn state(&self) -> CartPoleState {
        self.state
    }

    /// Places the system in an explicit state and starts a fresh episode from it.
    pub fn set_state(&mut self, state: CartPoleState) -> Vec<f64> {
        self.state = state;
        self.steps = 0;
        self.done = false;
        self.observation()
    }

    pub fn observation(&self) -> Vec<f64> {
        let s = self.state;
        vec![s.x, s.x_dot, s.theta.cos(), s.theta.sin(), s.theta_dot]
    }

    pub fn is_success(&self) -> bool {
        self.state.theta.cos() >= self.cfg.success_threshold && self.state.x.abs() <= self.cfg.x_limit
    }

    fn integrate(&mut self, force: f64) {
        let c = &self.cfg;
        let total_mass = c.cart_mass + c.pole_mass;
        let polemass_length = c.pole_mass * c.pole_half_length;
        let s = &mut self.state;
        let (sin, cos) = s.theta.sin_cos();
        let temp = (force + polemass_length * s.theta_dot * s.theta_dot * sin) / total_mass;
        let theta_acc = (c.gravity * sin - cos * temp)
            / (c.pole_half_length * (4.0 / 3.0 - c.pole_mass * cos * cos / total_mass));
        let x_acc = temp - polemass_length * theta_acc * cos / total_mass;
        // semi-implicit Euler: velocities first, positions from the new velocities
        s.x_dot += c.timestep * x_acc;
        s.x += c.timestep * s.x_dot;
        s.theta_dot += c.timestep * theta_acc;
        s.theta += c.timestep * s.theta_dot;
    }
}

impl Environment for SparseCartPole {
    fn obs_dim(&self) -> usize {
        Self::OBS_DIM
    }

    fn n_actions(&self) -> usize {
        Self::N_ACTIONS
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.cfg.init_noise;
        let mut u = || if n > 0.0 { rng.random_range(-n..=n) } else { 0.0 };
        let state = CartPoleState {
            x: u(),
            x_dot: u(),
            theta: std::f64::consts::PI + u(),
            theta_dot: u(),
        };
        self.set_state(state)
    }

    fn step(&mut self, action: usize) -> Result<StepResult> {
        check_action(action, Self::N_ACTIONS)?;
        if self.done {
            return Err(Error::usage("step called on a finished episode; call reset first"));
        }
        let force = (action as f64 - 1.0) * self.cfg.force_magnitude;
        self.integrate(force);
        self.steps += 1;
        let reward_ext = if self.is_success() { 1.0 } else { 0.0 };
        let terminated = self.state.x.abs() > self.cfg.x_limit;
        let truncated = !terminated && self.steps >= self.cfg.max_steps;
        self.done = terminated || truncated;
        Ok(StepResult { observation: self.observation(), reward_ext, terminated, truncated })
    }

    fn state_key(&self, observation: &[f64]) -> StateKey {
        self.grid.key(observation)
    }
}
