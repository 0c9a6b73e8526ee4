//! Random finite MDPs, a two-armed bandit, and value iteration.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_action, one_hot, Environment, StateKey, StepResult};
use crate::error::{Error, Result};

const ROW_TOLERANCE: f64 = 1e-12;

/// Finite MDP with rewards `r(s, a)` and transition rows `P(. | s, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomMdp {
    pub n_states: usize,
    pub n_actions: usize,
    /// `transitions[s][a][s']`
    pub transitions: Vec<Vec<Vec<f64>>>,
    /// `rewards[s][a]`
    pub rewards: Vec<Vec<f64>>,
    pub gamma: f64,
}

impl RandomMdp {
    /// Rewards uniform on `[0, 1)`; each transition row is a normalized vector
    /// of uniform draws, so every successor is reachable.
    pub fn generate(n_states: usize, n_actions: usize, gamma: f64, seed: u64) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::config("random MDP needs at least one state and one action"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut transitions = Vec::with_capacity(n_states);
        let mut rewards = Vec::with_capacity(n_states);
        for _ in 0..n_states {
            let mut rows = Vec::with_capacity(n_actions);
            let mut rs = Vec::with_capacity(n_actions);
            for _ in 0..n_actions {
                // cubing skews rows toward a few likely successors
                let raw: Vec<f64> = (0..n_states).map(|_| rng.random::<f64>().powi(3) + 1e-3).collect();
                let total: f64 = raw.iter().sum();
                rows.push(raw.into_iter().map(|p| p / total).collect());
                rs.push(rng.random::<f64>());
            }
            transitions.push(rows);
            rewards.push(rs);
        }
        let mdp = Self { n_states, n_actions, transitions, rewards, gamma };
        mdp.validate()?;
        Ok(mdp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::config(format!("discount must lie in [0, 1), got {}", self.gamma)));
        }
        if self.transitions.len() != self.n_states || self.rewards.len() != self.n_states {
            return Err(Error::config("tables do not match the number of states"));
        }
        for s in 0..self.n_states {
            if self.transitions[s].len() != self.n_actions || self.rewards[s].len() != self.n_actions {
                return Err(Error::config(format!("state {s} tables do not match the number of actions")));
            }
            for a in 0..self.n_actions {
                let row = &self.transitions[s][a];
                if row.len() != self.n_states || row.iter().any(|&p| !(p >= 0.0)) {
                    return Err(Error::config(format!("transition row ({s}, {a}) is malformed")));
                }
                let total: f64 = row.iter().sum();
                if (total - 1.0).abs() > ROW_TOLERANCE {
                    return Err(Error::config(format!("transition row ({s}, {a}) sums to {total}, not 1")));
                }
            }
        }
        Ok(())
    }

    /// `Q(s, a) = r(s, a) + gamma * sum_s' P(s'|s,a) V(s')`
    pub fn q_value(&self, values: &[f64], s: usize, a: usize) -> f64 {
        let future: f64 = self.transitions[s][a].iter().zip(values).map(|(p, v)| p * v).sum();
        self.rewards[s][a] + self.gamma * future
    }

    /// Plain-text form: a header block, then one `T s a s' p` line per transition
    /// probability and one `R s a r` line per reward. Floats use shortest
    /// round-trip formatting so parsing reproduces the tables exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("# random-mdp v1\n");
        let _ = writeln!(out, "states {}", self.n_states);
        let _ = writeln!(out, "actions {}", self.n_actions);
        let _ = writeln!(out, "gamma {:?}", self.gamma);
        out.push_str("# T state action next_state probability\n");
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                for (s2, p) in self.transitions[s][a].iter().enumerate() {
                    let _ = writeln!(out, "T {s} {a} {s2} {p:?}");
                }
            }
        }
        out.push_str("# R state action reward\n");
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let _ = writeln!(out, "R {s} {a} {:?}", self.rewards[s][a]);
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::config(format!("random-mdp line {}: {msg}", line + 1));
        let (mut n_states, mut n_actions, mut gamma) = (None, None, None);
        let mut entries = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[0] {
                "states" | "actions" if fields.len() == 2 => {
                    let v: usize = fields[1].parse().map_err(|_| bad(ln, "bad integer"))?;
                    if fields[0] == "states" {
                        n_states = Some(v);
                    } else {
                        n_actions = Some(v);
                    }
                }
                "gamma" if fields.len() == 2 => gamma = Some(fields[1].parse().map_err(|_| bad(ln, "bad float"))?),
                "T" | "R" => entries.push((ln, fields)),
                _ => return Err(bad(ln, "unrecognized line")),
            }
        }
        let n_states = n_states.ok_or_else(|| Error::config("random-mdp: missing `states`"))?;
        let n_actions = n_actions.ok_or_else(|| Error::config("random-mdp: missing `actions`"))?;
        let gamma = gamma.ok_or_else(|| Error::config("random-mdp: missing `gamma`"))?;
        let mut transitions = vec![vec![vec![0.0; n_states]; n_actions]; n_states];
        let mut rewards = vec![vec![0.0; n_actions]; n_states];
        for (ln, f) in entries {
            let idx = |i: usize, bound: usize| -> Result<usize> {
                let v: usize = f.get(i).ok_or_else(|| bad(ln, "missing field"))?.parse().map_err(|_| bad(ln, "bad index"))?;
                if v >= bound {
                    return Err(bad(ln, "index out of range"));
                }
                Ok(v)
            };
            let val = |i: usize| -> Result<f64> {
                f.get(i).ok_or_else(|| bad(ln, "missing field"))?.parse().map_err(|_| bad(ln, "bad float"))
            };
            if f[0] == "T" && f.len() == 5 {
                transitions[idx(1, n_states)?][idx(2, n_actions)?][idx(3, n_states)?] = val(4)?;
            } else if f[0] == "R" && f.len() == 4 {
                rewards[idx(1, n_states)?][idx(2, n_actions)?] = val(3)?;
            } else {
                return Err(bad(ln, "wrong field count"));
            }
        }
        let mdp = Self { n_states, n_actions, transitions, rewards, gamma };
        mdp.validate()?;
        Ok(mdp)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueIterationResult {
    pub values: Vec<f64>,
    /// Greedy action per state, ties broken toward the lowest index.
    pub policy: Vec<usize>,
    pub iterations: usize,
    pub residual: f64,
}

/// Iterates the Bellman optimality operator until the sup-norm residual
/// `|TV - V|` is at most `tolerance`.
pub fn value_iteration(mdp: &RandomMdp, tolerance: f64) -> Result<ValueIterationResult> {
    mdp.validate()?;
    if !(tolerance > 0.0) {
        return Err(Error::config("value iteration tolerance must be positive"));
    }
    let mut values = vec![0.0; mdp.n_states];
    let mut iterations = 0;
    loop {
        let next: Vec<f64> = (0..mdp.n_states)
            .map(|s| (0..mdp.n_actions).map(|a| mdp.q_value(&values, s, a)).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let residual = next.iter().zip(&values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        values = next;
        iterations += 1;
        if residual <= tolerance {
            let policy = greedy_policy(mdp, &values);
            // residual of the returned values, one more application of the operator
            let check = (0..mdp.n_states)
                .map(|s| (mdp.q_value(&values, s, policy[s]) - values[s]).abs())
                .fold(0.0, f64::max);
            return Ok(ValueIterationResult { values, policy, iterations, residual: check });
        }
    }
}

pub fn greedy_policy(mdp: &RandomMdp, values: &[f64]) -> Vec<usize> {
    (0..mdp.n_states)
        .map(|s| {
            let mut best = 0;
            let mut best_q = mdp.q_value(values, s, 0);
            for a in 1..mdp.n_actions {
                let q = mdp.q_value(values, s, a);
                if q > best_q {
                    best = a;
                    best_q = q;
                }
            }
            best
        })
        .collect()
}

/// A [`RandomMdp`] as an episodic environment: uniform random start state,
/// no terminal states, truncation after `horizon` steps.
#[derive(Debug, Clone)]
pub struct TabularEnv {
    mdp: RandomMdp,
    horizon: usize,
    state: usize,
    steps: usize,
    rng: ChaCha8Rng,
    done: bool,
}

impl TabularEnv {
    pub const DEFAULT_HORIZON: usize = 50;

    pub fn new(mdp: RandomMdp) -> Self {
        Self::with_horizon(mdp, Self::DEFAULT_HORIZON)
    }

    pub fn with_horizon(mdp: RandomMdp, horizon: usize) -> Self {
        Self { mdp, horizon: horizon.max(1), state: 0, steps: 0, rng: ChaCha8Rng::seed_from_u64(0), done: true }
    }

    pub fn mdp(&self) -> &RandomMdp {
        &self.mdp
    }

    pub fn state(&self) -> usize {
        self.state
    }
}

impl Environment for TabularEnv {
    fn obs_dim(&self) -> usize {
        self.mdp.n_states
    }

    fn n_actions(&self) -> usize {
        self.mdp.n_actions
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.state = self.rng.random_range(0..self.mdp.n_states);
        self.steps = 0;
        self.done = false;
        one_hot(self.state, self.mdp.n_states)
    }

    fn step(&mut self, action: usize) -> Result<StepResult> {
        check_action(action, self.mdp.n_actions)?;
        if self.done {
            return Err(Error::usage("step called on a finished episode; call reset first"));
        }
        let reward_ext = self.mdp.rewards[self.state][action];
        let u: f64 = self.rng.random();
        let row = &self.mdp.transitions[self.state][action];
        let mut acc = 0.0;
        let mut next = row.len() - 1;
        for (s2, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                next = s2;
                break;
            }
        }
        self.state = next;
        self.steps += 1;
        let truncated = self.steps >= self.horizon;
        self.done = truncated;
        Ok(StepResult { observation: one_hot(next, self.mdp.n_states), reward_ext, terminated: false, truncated })
    }

    fn state_key(&self, observation: &[f64]) -> StateKey {
        vec![crate::numerics::argmax(observation) as i32]
    }
}

/// Single-state bandit: every pull ends the episode. Observation is `[1]`.
#[derive(Debug, Clone)]
pub struct Bandit {
    arm_rewards: Vec<f64>,
    done: bool,
}

impl Bandit {
    pub fn new(arm_rewards: Vec<f64>) -> Result<Self> {
        if arm_rewards.len() < 2 {
            return Err(Error::config("a bandit needs at least two arms"));
        }
        Ok(Self { arm_rewards, done: true })
    }

    /// Arm 0 pays 1, arm 1 pays 0.
    pub fn two_armed() -> Self {
        Self { arm_rewards: vec![1.0, 0.0], done: true }
    }
}

impl Environment for Bandit {
    fn obs_dim(&self) -> usize {
        1
    }

    fn n_actions(&self) -> usize {
        self.arm_rewards.len()
    }

    fn reset(&mut self, _seed: u64) -> Vec<f64> {
        self.done = false;
        vec![1.0]
    }

    fn step(&mut self, action: usize) -> Result<StepResult> {
        check_action(action, self.arm_rewards.len())?;
        if self.done {
            return Err(Error::usage("step called on a finished episode; call reset first"));
        }
        self.done = true;
        Ok(StepResult { observation: vec![1.0], reward_ext: self.arm_rewards[action], terminated: true, truncated: false })
    }

    fn state_key(&self, _observation: &[f64]) -> StateKey {
        vec![0]
    }
}
