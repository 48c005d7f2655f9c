//! Actor-critic training for the elimination game.
//!
//! An episode eliminates every node of a graph, one per step. The agent
//! pays `log c_t` per step, where `c_t` is the running maximum elimination
//! degree, and pays `c_t` (the width of the order) at the last step.

mod config;
mod env;
mod gae;
mod loss;
mod train;

pub use config::{ConfigError, TrainConfig, ValueTarget};
pub use env::{reward, rollout, EliminationEnv, EnvError, Episode, StepOutcome};
pub use gae::{gae, GaeError};
pub use loss::{episode_loss, LossStats, LossWeights};
pub use train::{GraphSource, TrainError, Trainer, UpdateLog, LOG_HEADER};
