//! Dense proxy rewards learned from action-free demonstrations.
//!
//! A progress model is trained to predict the signed, normalized temporal
//! distance between two frames of an expert video. Decoded on adjacent
//! frames of an agent rollout, that prediction becomes a step-wise reward
//! that can be mixed with a sparse success signal to train an RL agent.
//!
//! Modules, bottom-up:
//!
//! - [`codec`] and [`sampling`]: distance targets, two-hot bins, pair sampling.
//! - [`nn`]: the frame encoder / pair head, cross-entropy, Adam, checkpoints.
//! - [`env`]: occupancy-grid tasks, scripted experts, demo datasets.
//! - [`reward`]: training the progress model and using it as a reward.
//! - [`rl`]: a double-Q agent with n-step replay on the combined reward.
//! - [`eval`]: value-order correlation, trace separation, shaping identities,
//!   ablation matrices.
//! - [`harness`]: config files, manifests and the command implementations
//!   behind the `progress-reward` binary.

pub mod codec;
pub mod env;
pub mod error;
pub mod eval;
pub mod harness;
pub mod io;
pub mod nn;
pub mod reward;
pub mod rl;
pub mod rng;
pub mod sampling;

pub use codec::{normalized_distance, TimeIndexPair, TwoHotCodec};
pub use env::{Action, EnvState, Frame, GridWorld, Task, Trajectory};
pub use error::{Error, Result};
pub use reward::{ProgressRewarder, RewardModelHandle, RewardTrainConfig};
