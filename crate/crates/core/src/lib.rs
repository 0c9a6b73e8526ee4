//! Policy-gradient reinforcement learning with pluggable exploration.
//!
//! The numerical core ([`numerics`], [`exploration`]) is generic over the
//! scalar type; the agents, environments and experiment harness run in `f64`.

pub mod agents;
pub mod envs;
pub mod error;
pub mod exploration;
pub mod harness;
pub mod numerics;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision network, the one used by agents.
pub type Mlp = numerics::MlpNetwork<f64>;
pub type MlpF32 = numerics::MlpNetwork<f32>;
pub type Adam = numerics::AdamState<f64>;
pub type Novelty = exploration::NoveltyModels<f64>;
