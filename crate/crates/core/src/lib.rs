//! Expert-free online transfer learning (EF-OnTL) for multi-agent deep Q-learning.
//!
//! Agents learn independently with dueling DQN, label every interaction with an
//! epistemic uncertainty estimate (sars-RND), and periodically elect a temporary
//! source whose transfer buffer the other agents filter to pull a personalised
//! batch of experience.
//!
//! Module map:
//! - [`nn`]: dense / per-cell layers, reverse-mode gradients, Adam, checkpoints.
//! - [`envs`]: Cart-Pole and the multi-team predator-prey grid world.
//! - [`agent`]: dueling DQN agent, replay buffer, epsilon schedule, ensemble heads.
//! - [`uncertainty`]: RND and sars-RND estimators plus the action-change spike study.
//! - [`transfer`]: transfer buffers, source selection, content selection, orchestration.
//! - [`baselines`]: no-transfer, OCMAS and RCMP.
//! - [`harness`]: experiment configs, campaigns, CSV artifacts and statistics.

pub mod agent;
pub mod baselines;
pub mod envs;
mod error;
pub mod harness;
pub mod nn;
pub mod rng;
pub mod runner;
pub mod transfer;
pub mod uncertainty;

pub use error::{Error, Result};
