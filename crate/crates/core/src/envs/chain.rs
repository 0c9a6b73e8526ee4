//! Deterministic chain: a small distractor reward at the left end and the
//! goal at the right end, reachable only by a long run of right moves.

use super::{check_action, one_hot, Environment, StateKey, StepResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ChainMdpConfig {
    pub length: usize,
    pub left_reward: f64,
    pub goal_reward: f64,
    pub start_state: usize,
    /// Episode cap; `None` means `2 * length`.
    pub max_steps: Option<usize>,
    /// End the episode on reaching the goal instead of paying the goal reward per step.
    pub terminal_goal: bool,
}

impl Default for ChainMdpConfig {
    fn default() -> Self {
        Self { length: 40, left_reward: 0.001, goal_reward: 1.0, start_state: 1, max_steps: None, terminal_goal: false }
    }
}

/// Actions: 0 left, 1 right. Observations are one-hot state indicators.
/// Both ends pay their reward on every step spent there; with
/// `terminal_goal` the episode ends on reaching the goal instead.
#[derive(Debug, Clone)]
pub struct ChainMdp {
    cfg: ChainMdpConfig,
    state: usize,
    steps: usize,
    done: bool,
}

impl ChainMdp {
    pub fn new(cfg: ChainMdpConfig) -> Result<Self> {
        if cfg.length < 3 {
            return Err(Error::config(format!("chain length must be at least 3, got {}", cfg.length)));
        }
        if cfg.start_state >= cfg.length - 1 {
            return Err(Error::config("chain start state must lie before the goal"));
        }
        Ok(Self { state: cfg.start_state, cfg, steps: 0, done: true })
    }

    pub fn state(&self) -> usize {
        self.state
    }

    pub fn goal(&self) -> usize {
        self.cfg.length - 1
    }

    pub fn max_steps(&self) -> usize {
        self.cfg.max_steps.unwrap_or(2 * self.cfg.length)
    }
}

impl Environment for ChainMdp {
    fn obs_dim(&self) -> usize {
        self.cfg.length
    }

    fn n_actions(&self) -> usize {
        2
    }

    fn reset(&mut self, _seed: u64) -> Vec<f64> {
        self.state = self.cfg.start_state;
        self.steps = 0;
        self.done = false;
        one_hot(self.state, self.cfg.length)
    }

    fn step(&mut self, action: usize) -> Result<StepResult> {
        check_action(action, 2)?;
        if self.done {
            return Err(Error::usage("step called on a finished episode; call reset first"));
        }
        self.state = if action == 0 { self.state.saturating_sub(1) } else { (self.state + 1).min(self.goal()) };
        self.steps += 1;
        let reward_ext = if self.state == 0 {
            self.cfg.left_reward
        } else if self.state == self.goal() {
            self.cfg.goal_reward
        } else {
            0.0
        };
        let terminated = self.cfg.terminal_goal && self.state == self.goal();
        let truncated = !terminated && self.steps >= self.max_steps();
        self.done = terminated || truncated;
        Ok(StepResult { observation: one_hot(self.state, self.cfg.length), reward_ext, terminated, truncated })
    }

    fn state_key(&self, observation: &[f64]) -> StateKey {
        vec![crate::numerics::argmax(observation) as i32]
    }
}
