//! Seedable desk-scale environments and the tabular oracle.

pub mod cartpole;
pub mod chain;
pub mod discretize;
pub mod tabular;

use crate::error::{Error, Result};

pub use cartpole::{SparseCartPole, SparseCartPoleConfig};
pub use chain::{ChainMdp, ChainMdpConfig};
pub use discretize::{Discretizer, StateKey};
pub use tabular::{value_iteration, Bandit, RandomMdp, TabularEnv, ValueIterationResult};

/// Outcome of one environment transition.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    /// Extrinsic reward emitted by the environment.
    pub reward_ext: f64,
    pub terminated: bool,
    pub truncated: bool,
}

impl StepResult {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

/// Discrete-action, episodic environment.
pub trait Environment: Send {
    fn obs_dim(&self) -> usize;
    fn n_actions(&self) -> usize;
    /// Reinitializes the episode deterministically from `seed`.
    fn reset(&mut self, seed: u64) -> Vec<f64>;
    fn step(&mut self, action: usize) -> Result<StepResult>;
    /// Discrete identity of an observation, used by count-based novelty.
    fn state_key(&self, observation: &[f64]) -> StateKey;
}

pub(crate) fn check_action(action: usize, n_actions: usize) -> Result<()> {
    if action >= n_actions {
        return Err(Error::usage(format!("action {action} out of range for {n_actions} actions")));
    }
    Ok(())
}

pub(crate) fn one_hot(index: usize, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[index] = 1.0;
    v
}

/// Builds an environment from its id: `sparse-cartpole`, `chain:<L>`,
/// `random-mdp:<states>x<actions>:<seed>` or `bandit`.
pub fn make_env(id: &str) -> Result<Box<dyn Environment>> {
    let bad = || Error::config(format!("unknown environment id `{id}`"));
    let mut parts = id.split(':');
    match parts.next() {
        Some("sparse-cartpole") if parts.next().is_none() => {
            Ok(Box::new(SparseCartPole::new(SparseCartPoleConfig::default())?))
        }
        Some("chain") => {
            let length = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if parts.next().is_some() {
                return Err(bad());
            }
            Ok(Box::new(ChainMdp::new(ChainMdpConfig { length, ..Default::default() })?))
        }
        Some("random-mdp") => {
            let dims = parts.next().ok_or_else(bad)?;
            let seed: u64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if parts.next().is_some() {
                return Err(bad());
            }
            let (s, a) = dims.split_once('x').ok_or_else(bad)?;
            let s: usize = s.parse().map_err(|_| bad())?;
            let a: usize = a.parse().map_err(|_| bad())?;
            Ok(Box::new(TabularEnv::new(RandomMdp::generate(s, a, 0.9, seed)?)))
        }
        Some("bandit") if parts.next().is_none() => Ok(Box::new(Bandit::two_armed())),
        _ => Err(bad()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_resolve() {
        assert_eq!(make_env("sparse-cartpole").unwrap().n_actions(), 3);
        assert_eq!(make_env("chain:40").unwrap().obs_dim(), 40);
        let mdp = make_env("random-mdp:5x2:3").unwrap();
        assert_eq!((mdp.obs_dim(), mdp.n_actions()), (5, 2));
        assert_eq!(make_env("bandit").unwrap().n_actions(), 2);
    }

    #[test]
    fn bad_ids_rejected() {
        for id in ["", "chain", "chain:x", "chain:2", "random-mdp:5x2", "random-mdp:5:1", "cartpole", "sparse-cartpole:1"] {
            assert!(make_env(id).is_err(), "{id}");
        }
    }
}
