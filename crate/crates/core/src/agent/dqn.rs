use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::dueling::{Architecture, DuelingQNet, QNetConfig};
use super::epsilon::{argmax, epsilon_greedy, EpsilonSchedule};
use super::replay::{ReplayBuffer, Transition};
use crate::nn::checkpoint;
use crate::rng::{self, Rng, Stream};
use crate::Result;

/// Everything needed to build one learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DqnConfig {
    pub qnet: QNetConfig,
    pub replay_capacity: usize,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Episodes over which ε anneals from start to end.
    pub eps_episodes: usize,
}

impl DqnConfig {
    /// Dense 4→128→64 trunk, lr 1e-4, target copy every 1,000 steps.
    pub fn cartpole(eps_episodes: usize) -> Self {
        Self {
            qnet: QNetConfig {
                arch: Architecture::Mlp {
                    input: 4,
                    hidden: vec![128, 64],
                },
                n_actions: 2,
                learning_rate: 1e-4,
                gamma: 0.999,
                batch_size: 32,
                update_step_period: 1_000,
            },
            replay_capacity: 100_000,
            eps_start: 0.95,
            eps_end: 0.05,
            eps_episodes,
        }
    }

    /// Per-cell 3→7→15 encoder, dense 135→256, lr 1e-5, target copy every
    /// 10,000 steps.
    pub fn predator_prey(eps_episodes: usize) -> Self {
        Self {
            qnet: QNetConfig {
                arch: Architecture::PerCell {
                    cells: 9,
                    channels: vec![3, 7, 15],
                    hidden: vec![256],
                },
                n_actions: 5,
                learning_rate: 1e-5,
                gamma: 0.999,
                batch_size: 32,
                update_step_period: 10_000,
            },
            replay_capacity: 100_000,
            eps_start: 0.95,
            eps_end: 0.05,
            eps_episodes,
        }
    }
}

/// A sampled training minibatch and the loss it produced.
#[derive(Debug, Clone)]
pub struct Minibatch {
    pub loss: f64,
    pub items: Vec<Arc<Transition>>,
}

impl Minibatch {
    pub fn refs(&self) -> Vec<&Transition> {
        self.items.iter().map(|t| t.as_ref()).collect()
    }
}

/// ε-greedy dueling DQN learner with its own replay.
///
/// Parameter init, exploration and replay sampling draw from separate streams
/// keyed by `(seed, agent index)`.
#[derive(Debug, Clone)]
pub struct DqnAgent {
    net: DuelingQNet,
    replay: ReplayBuffer,
    epsilon: EpsilonSchedule,
    explore: Rng,
    sampler: Rng,
}

impl DqnAgent {
    pub fn new(cfg: &DqnConfig, seed: u64, index: u64) -> Result<Self> {
        let mut init = rng::stream(seed, Stream::AgentInit, index);
        Ok(Self {
            net: DuelingQNet::new(&cfg.qnet, 1, &mut init)?,
            replay: ReplayBuffer::new(cfg.replay_capacity),
            epsilon: EpsilonSchedule::new(cfg.eps_start, cfg.eps_end, cfg.eps_episodes),
            explore: rng::stream(seed, Stream::AgentExplore, index),
            sampler: rng::stream(seed, Stream::AgentReplay, index),
        })
    }

    pub fn net(&self) -> &DuelingQNet {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut DuelingQNet {
        &mut self.net
    }

    pub fn replay(&self) -> &ReplayBuffer {
        &self.replay
    }

    pub fn epsilon(&self) -> &EpsilonSchedule {
        &self.epsilon
    }

    pub fn n_actions(&self) -> usize {
        self.net.n_actions()
    }

    /// ε-greedy action at the current ε.
    pub fn act(&mut self, s: &[f64]) -> Result<usize> {
        let q = self.net.q_values(s)?;
        Ok(epsilon_greedy(&q, self.epsilon.current(), &mut self.explore))
    }

    pub fn greedy(&self, s: &[f64]) -> Result<usize> {
        Ok(argmax(&self.net.q_values(s)?))
    }

    pub fn remember(&mut self, t: impl Into<Arc<Transition>>) {
        self.replay.push(t);
    }

    /// One training step once the replay holds a full minibatch. Returns the
    /// minibatch so auxiliary learners can fit on exactly the same samples.
    pub fn train(&mut self) -> Result<Option<Minibatch>> {
        let b = self.batch_size();
        if self.replay.len() < b {
            return Ok(None);
        }
        let items = self.replay.sample_shared(b, &mut self.sampler);
        let refs: Vec<&Transition> = items.iter().map(|t| t.as_ref()).collect();
        let loss = self.net.train_step(&refs)?;
        Ok(Some(Minibatch { loss, items }))
    }

    /// Stores `t` and trains once.
    pub fn observe(&mut self, t: impl Into<Arc<Transition>>) -> Result<Option<Minibatch>> {
        self.remember(t);
        self.train()
    }

    pub fn batch_size(&self) -> usize {
        self.net.batch_size()
    }

    pub fn end_episode(&mut self) {
        self.epsilon.advance();
    }

    /// Saves the online network.
    pub fn save<W: Write>(&self, w: &mut W) -> Result<()> {
        checkpoint::write_network(w, self.net.online())
    }

    /// Loads online parameters and copies them into the target.
    pub fn load<R: Read>(&mut self, r: &mut R) -> Result<()> {
        let net = checkpoint::read_network(r)?;
        self.net.load_parameters(&net)
    }
}
