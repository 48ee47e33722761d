//! Dueling deep-Q learners: replay, ε-greedy control, online/target networks
//! and the multi-head ensemble used for disagreement-based uncertainty.

mod dqn;
mod dueling;
mod ensemble;
mod epsilon;
mod replay;


pub use dqn::{DqnAgent, DqnConfig, Minibatch};
pub use dueling::{dueling_aggregate, Architecture, DuelingQNet, QNetConfig};
pub use ensemble::{vote_uncertainty, EnsembleQNet};
pub use epsilon::{argmax, epsilon_greedy, majority_vote, EpsilonSchedule};
pub use replay::{ReplayBuffer, Transition};
