//! Multiplicative perturbation of the policy's pre-softmax outputs.
//!
//! Pipeline for logits `l` and factors `eps`:
//! 1. `z = l - min(l) + 1e-6` so every entry is strictly positive;
//! 2. `z' = z * (1 + eps)`;
//! 3. `z'' = z' / sum(z')`;
//! 4. `softmax(z'')`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::softmax;
use crate::scalar::Scalar;

pub const POSITIVITY_OFFSET: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ShapeMode {
    #[default]
    Off,
    /// Factors drawn uniformly from `(0, eta_max)`.
    Sporadic,
    /// Factors from normalized autoencoder reconstruction errors.
    Structured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyShapeConfig {
    pub mode: ShapeMode,
    pub eta_max: f64,
    /// Fraction of steps on which the shaping is applied.
    pub apply_probability: f64,
}

impl Default for PolicyShapeConfig {
    fn default() -> Self {
        Self { mode: ShapeMode::Off, eta_max: 0.5, apply_probability: 1.0 }
    }
}

impl PolicyShapeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta_max > 0.0) || !self.eta_max.is_finite() {
            return Err(Error::config("eta_max must be positive"));
        }
        if !(0.0..=1.0).contains(&self.apply_probability) {
            return Err(Error::config("apply_probability must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Independent draws from the open interval `(0, eta_max)`.
pub fn sporadic_epsilons<T: Scalar, R: Rng + ?Sized>(n_actions: usize, eta_max: f64, rng: &mut R) -> Vec<T> {
    (0..n_actions)
        .map(|_| loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                break T::lit(u * eta_max);
            }
        })
        .collect()
}

/// Behavior distribution obtained by shaping `logits` with factors `eps`.
pub fn shape_logits<T: Scalar>(logits: &[T], eps: &[T]) -> Result<Vec<T>> {
    if logits.len() != eps.len() {
        return Err(Error::usage(format!(
            "{} logits but {} perturbation factors",
            logits.len(),
            eps.len()
        )));
    }
    if logits.is_empty() {
        return Err(Error::usage("cannot shape an empty policy"));
    }
    if eps.iter().any(|&e| !(e >= T::zero())) {
        return Err(Error::usage("perturbation factors must be nonnegative"));
    }
    let min = logits.iter().fold(T::infinity(), |m, &x| m.min(x));
    let offset = T::lit(POSITIVITY_OFFSET);
    let scaled: Vec<T> = logits.iter().zip(eps).map(|(&l, &e)| (l - min + offset) * (T::one() + e)).collect();
    let total: T = scaled.iter().copied().sum();
    let normalized: Vec<T> = scaled.into_iter().map(|z| z / total).collect();
    softmax(&normalized)
}
