//! Simulation environments and the joint-step [`Arena`] interface the training
//! loops drive.

pub mod cartpole;
pub mod gridworld;
mod trace;

#[cfg(test)]
mod gridworld_tests;

pub use cartpole::{CartAction, CartPole, CartPoleState};
pub use gridworld::{
    prey_policy, CatchOutcome, Entity, EntityKind, GridConfig, GridWorld, MatchOutcome, Orientation,
    PredatorAction, Team,
};
pub use trace::{state_hash, TraceWriter};

use crate::rng::{self, Rng, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepInfo {
    pub catch: Option<CatchOutcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_observation: Vec<f64>,
    pub reward: f64,
    /// A true terminal state: the learner must not bootstrap past it.
    pub terminal: bool,
    /// The episode is over for this agent (terminal or step limit).
    pub done: bool,
    pub info: StepInfo,
}

/// A set of agents stepping one episode at a time.
///
/// Agents whose episode has ended become inactive; the episode is over when no
/// agent is active. Actions for inactive agents must be `None`.
pub trait Arena {
    fn n_agents(&self) -> usize;
    fn obs_dim(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn reset(&mut self) -> Vec<Vec<f64>>;
    fn is_active(&self, agent: usize) -> bool;
    fn episode_done(&self) -> bool {
        (0..self.n_agents()).all(|a| !self.is_active(a))
    }
    fn step(&mut self, actions: &[Option<usize>]) -> Result<Vec<Option<StepResult>>>;
    fn team(&self, _agent: usize) -> Option<Team> {
        None
    }
    fn outcome(&self) -> Option<MatchOutcome> {
        None
    }
}

/// Independent Cart-Pole copies, one per agent.
#[derive(Debug, Clone)]
pub struct CartPoleArena {
    envs: Vec<CartPole>,
    rng: Rng,
}

impl CartPoleArena {
    pub fn new(n_agents: usize, max_steps: usize, seed: u64) -> Self {
        Self {
            envs: (0..n_agents).map(|_| CartPole::new(max_steps)).collect(),
            rng: rng::stream(seed, Stream::Environment, 0),
        }
    }

    pub fn envs(&self) -> &[CartPole] {
        &self.envs
    }
}

impl Arena for CartPoleArena {
    fn n_agents(&self) -> usize {
        self.envs.len()
    }

    fn obs_dim(&self) -> usize {
        4
    }

    fn n_actions(&self) -> usize {
        2
    }

    fn reset(&mut self) -> Vec<Vec<f64>> {
        self.envs.iter_mut().map(|e| e.reset(&mut self.rng)).collect()
    }

    fn is_active(&self, agent: usize) -> bool {
        self.envs.get(agent).is_some_and(|e| !e.is_done())
    }

    fn step(&mut self, actions: &[Option<usize>]) -> Result<Vec<Option<StepResult>>> {
        if actions.len() != self.envs.len() {
            return Err(Error::MissingAction(actions.len().min(self.envs.len())));
        }
        let mut out = Vec::with_capacity(self.envs.len());
        for (i, (env, a)) in self.envs.iter_mut().zip(actions).enumerate() {
            out.push(match (env.is_done(), a) {
                (true, None) => None,
                (true, Some(_)) => return Err(Error::EpisodeDone),
                (false, None) => return Err(Error::MissingAction(i)),
                (false, Some(a)) => Some(env.step(CartAction::try_from(*a)?)?),
            });
        }
        Ok(out)
    }
}

/// One shared predator-prey world; every predator is an agent.
#[derive(Debug, Clone)]
pub struct PredatorPreyArena {
    world: GridWorld,
    rng: Rng,
}

impl PredatorPreyArena {
    pub fn new(cfg: GridConfig, seed: u64) -> Self {
        Self {
            world: GridWorld::new(cfg),
            rng: rng::stream(seed, Stream::Environment, 0),
        }
    }

    pub fn world(&self) -> &GridWorld {
        &self.world
    }
}

impl Arena for PredatorPreyArena {
    fn n_agents(&self) -> usize {
        self.world.config().n_predators()
    }

    fn obs_dim(&self) -> usize {
        gridworld::OBS_LEN
    }

    fn n_actions(&self) -> usize {
        PredatorAction::ALL.len()
    }

    fn reset(&mut self) -> Vec<Vec<f64>> {
        self.world.reset(&mut self.rng);
        (0..self.n_agents())
            .map(|a| self.world.observe(a).expect("predators are always alive"))
            .collect()
    }

    fn is_active(&self, agent: usize) -> bool {
        agent < self.n_agents() && !self.world.is_done()
    }

    fn step(&mut self, actions: &[Option<usize>]) -> Result<Vec<Option<StepResult>>> {
        let joint = actions
            .iter()
            .enumerate()
            .map(|(i, a)| a.ok_or(Error::MissingAction(i)).and_then(PredatorAction::try_from))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.world.step(&joint, &mut self.rng)?.into_iter().map(Some).collect())
    }

    fn team(&self, agent: usize) -> Option<Team> {
        self.world.entities().get(agent).map(|e| e.team)
    }

    fn outcome(&self) -> Option<MatchOutcome> {
        self.world.outcome()
    }
}
