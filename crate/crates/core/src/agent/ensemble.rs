use rand::Rng;

use super::dueling::{DuelingQNet, QNetConfig};
use super::epsilon::{argmax, majority_vote};
use super::replay::Transition;
use crate::Result;

/// Disagreement among head votes: `1 - (majority count) / H`.
pub fn vote_uncertainty(votes: &[usize], n_actions: usize) -> f64 {
    let winner = majority_vote(votes, n_actions);
    let count = votes.iter().filter(|&&v| v == winner).count();
    1.0 - count as f64 / votes.len() as f64
}

/// `H` dueling heads on one trunk, all fitted on the same minibatches.
#[derive(Debug, Clone)]
pub struct EnsembleQNet {
    net: DuelingQNet,
}

impl EnsembleQNet {
    pub const DEFAULT_HEADS: usize = 5;

    pub fn new<R: Rng + ?Sized>(cfg: &QNetConfig, heads: usize, rng: &mut R) -> Result<Self> {
        assert!(heads >= 2, "an ensemble needs at least two heads");
        Ok(Self {
            net: DuelingQNet::new(cfg, heads, rng)?,
        })
    }

    pub fn heads(&self) -> usize {
        self.net.heads()
    }

    pub fn net(&self) -> &DuelingQNet {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut DuelingQNet {
        &mut self.net
    }

    /// Greedy action of each head.
    pub fn votes(&self, s: &[f64]) -> Result<Vec<usize>> {
        Ok(self.net.head_q_values(s)?.iter().map(|q| argmax(q)).collect())
    }

    pub fn uncertainty(&self, s: &[f64]) -> Result<f64> {
        Ok(vote_uncertainty(&self.votes(s)?, self.net.n_actions()))
    }

    pub fn train_step(&mut self, batch: &[&Transition]) -> Result<f64> {
        self.net.train_step(batch)
    }
}
