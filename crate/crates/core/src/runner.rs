//! The shared episode loop every method runs on.
//!
//! A [`Coordinator`] hooks into the loop to choose training actions, see each
//! interaction before the learner trains on it, see each training minibatch,
//! and act at the end-of-episode barrier. The plain independent learner is the
//! coordinator that does nothing.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agent::{DqnAgent, DqnConfig, Minibatch, Transition};
use crate::envs::{Arena, CartPoleArena, CatchOutcome, GridConfig, MatchOutcome, PredatorPreyArena, Team};
use crate::transfer::TransferRecord;
use crate::uncertainty::EstimatorConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    #[serde(alias = "cart_pole")]
    Cartpole,
    #[serde(alias = "predator_prey")]
    Mtpp,
}

impl EnvKind {
    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Cartpole => "cartpole",
            EnvKind::Mtpp => "mtpp",
        }
    }
}

/// Environment, schedule and learner settings shared by every method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub env: EnvKind,
    /// Cart-Pole copies. The predator-prey world always has its 8 predators.
    pub n_agents: usize,
    pub train_episodes: usize,
    /// Greedy episodes after training, with learning switched off.
    pub test_episodes: usize,
    pub max_steps: usize,
    pub dqn: DqnConfig,
    pub estimator: EstimatorConfig,
}

impl RunSpec {
    pub fn cartpole(train_episodes: usize) -> Self {
        Self {
            env: EnvKind::Cartpole,
            n_agents: 5,
            train_episodes,
            test_episodes: 0,
            max_steps: 400,
            dqn: DqnConfig::cartpole(train_episodes),
            estimator: EstimatorConfig::default(),
        }
    }

    /// `episodes` in total, the last `test_episodes` of them greedy.
    pub fn predator_prey(episodes: usize, test_episodes: usize) -> Self {
        let train = episodes - test_episodes;
        Self {
            env: EnvKind::Mtpp,
            n_agents: 8,
            train_episodes: train,
            test_episodes,
            max_steps: 200,
            dqn: DqnConfig::predator_prey(train),
            estimator: EstimatorConfig::default(),
        }
    }

    pub fn total_episodes(&self) -> usize {
        self.train_episodes + self.test_episodes
    }

    /// Agents the method under study controls: every Cart-Pole agent, or the
    /// red predators. The green team are independent learners throughout.
    pub fn members(&self) -> Vec<usize> {
        match self.env {
            EnvKind::Cartpole => (0..self.n_agents).collect(),
            EnvKind::Mtpp => (0..4).collect(),
        }
    }

    pub fn grid_config(&self) -> GridConfig {
        GridConfig {
            max_steps: self.max_steps,
            ..GridConfig::multi_team()
        }
    }

    pub fn obs_dim(&self) -> usize {
        match self.env {
            EnvKind::Cartpole => 4,
            EnvKind::Mtpp => crate::envs::gridworld::OBS_LEN,
        }
    }

    pub fn n_actions(&self) -> usize {
        self.dqn.qnet.n_actions
    }

    pub fn arena(&self, seed: u64) -> Box<dyn Arena> {
        match self.env {
            EnvKind::Cartpole => Box::new(CartPoleArena::new(self.n_agents, self.max_steps, seed)),
            EnvKind::Mtpp => Box::new(PredatorPreyArena::new(self.grid_config(), seed)),
        }
    }

    pub fn agents(&self, seed: u64) -> Result<Vec<DqnAgent>> {
        let n = match self.env {
            EnvKind::Cartpole => self.n_agents,
            EnvKind::Mtpp => self.grid_config().n_predators(),
        };
        (0..n).map(|i| DqnAgent::new(&self.dqn, seed, i as u64)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.train_episodes == 0 {
            return Err(Error::Config("train_episodes must be positive".into()));
        }
        if self.env == EnvKind::Cartpole && self.n_agents == 0 {
            return Err(Error::Config("n_agents must be positive".into()));
        }
        if self.dqn.qnet.arch.input_size() != self.obs_dim() {
            return Err(Error::Config(format!(
                "network input {} does not match the {} observation size {}",
                self.dqn.qnet.arch.input_size(),
                self.env.name(),
                self.obs_dim()
            )));
        }
        let expected_actions = match self.env {
            EnvKind::Cartpole => 2,
            EnvKind::Mtpp => 5,
        };
        if self.n_actions() != expected_actions {
            return Err(Error::Config(format!("{} has {expected_actions} actions", self.env.name())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Train,
    Test,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Train => "train",
            Phase::Test => "test",
        }
    }
}

/// Result of a predator-prey episode from one team's side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpisodeOutcome {
    None,
    Win,
    Loss,
    Draw,
    Timeout,
}

impl EpisodeOutcome {
    pub fn name(self) -> &'static str {
        match self {
            EpisodeOutcome::None => "none",
            EpisodeOutcome::Win => "win",
            EpisodeOutcome::Loss => "loss",
            EpisodeOutcome::Draw => "draw",
            EpisodeOutcome::Timeout => "timeout",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "none" => EpisodeOutcome::None,
            "win" => EpisodeOutcome::Win,
            "loss" => EpisodeOutcome::Loss,
            "draw" => EpisodeOutcome::Draw,
            "timeout" => EpisodeOutcome::Timeout,
            _ => return None,
        })
    }

    /// Win-probability credit: 1 for a win, 0.5 for a draw, 0 otherwise.
    pub fn win_credit(self) -> f64 {
        match self {
            EpisodeOutcome::Win => 1.0,
            EpisodeOutcome::Draw => 0.5,
            _ => 0.0,
        }
    }

    fn for_team(outcome: Option<MatchOutcome>, team: Option<Team>) -> Self {
        match (outcome, team) {
            (Some(MatchOutcome::Win(w)), Some(t)) if w == t => EpisodeOutcome::Win,
            (Some(MatchOutcome::Win(_)), Some(_)) => EpisodeOutcome::Loss,
            (Some(MatchOutcome::Draw), Some(_)) => EpisodeOutcome::Draw,
            (Some(MatchOutcome::Timeout), Some(_)) => EpisodeOutcome::Timeout,
            _ => EpisodeOutcome::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRow {
    pub agent: usize,
    pub team: Option<Team>,
    pub episode: usize,
    pub ret: f64,
    pub length: usize,
    pub own_catches: usize,
    pub opp_catches: usize,
    pub failed_catches: usize,
    pub outcome: EpisodeOutcome,
    pub phase: Phase,
}

/// Cumulative advice spent by `agent` at the end of `episode`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetRow {
    pub episode: usize,
    pub agent: usize,
    pub used: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub method: String,
    pub episodes: Vec<EpisodeRow>,
    pub transfers: Vec<TransferRecord>,
    pub budget: Vec<BudgetRow>,
    pub agents: Vec<DqnAgent>,
}

impl RunOutput {
    /// Returns of `agent`, one per episode.
    pub fn returns(&self, agent: usize) -> Vec<f64> {
        self.episodes.iter().filter(|r| r.agent == agent).map(|r| r.ret).collect()
    }
}

/// Method hooks into the training phase. During greedy test episodes the
/// runner bypasses the coordinator.
pub trait Coordinator {
    fn name(&self) -> &'static str;

    /// Training actions for every agent; `None` for inactive agents.
    fn act(&mut self, agents: &mut [DqnAgent], obs: &[Vec<f64>], active: &[bool]) -> Result<Vec<Option<usize>>> {
        explore_actions(agents, obs, active)
    }

    /// Called with each fresh interaction before the learner stores and trains
    /// on it.
    fn on_transition(&mut self, _agent: usize, _t: &Arc<Transition>) -> Result<()> {
        Ok(())
    }

    /// Called with the minibatch the learner has just trained on.
    fn after_train(&mut self, _agent: usize, _batch: &Minibatch) -> Result<()> {
        Ok(())
    }

    /// The end-of-episode barrier. `returns[i]` holds agent i's episode returns
    /// so far, this episode included.
    fn end_episode(&mut self, _episode: usize, _agents: &mut [DqnAgent], _returns: &[Vec<f64>]) -> Result<()> {
        Ok(())
    }

    /// `(agent, advice used so far)` for budgeted methods.
    fn budget_used(&self) -> Option<Vec<(usize, usize)>> {
        None
    }

    fn take_transfers(&mut self) -> Vec<TransferRecord> {
        Vec::new()
    }
}

/// Independent learners, no communication.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoTransfer;

impl Coordinator for NoTransfer {
    fn name(&self) -> &'static str {
        "no_transfer"
    }
}

/// ε-greedy action of every active agent.
pub fn explore_actions(agents: &mut [DqnAgent], obs: &[Vec<f64>], active: &[bool]) -> Result<Vec<Option<usize>>> {
    agents
        .iter_mut()
        .zip(obs)
        .zip(active)
        .map(|((a, o), &on)| if on { a.act(o).map(Some) } else { Ok(None) })
        .collect()
}

pub fn greedy_actions(agents: &[DqnAgent], obs: &[Vec<f64>], active: &[bool]) -> Result<Vec<Option<usize>>> {
    agents
        .iter()
        .zip(obs)
        .zip(active)
        .map(|((a, o), &on)| if on { a.greedy(o).map(Some) } else { Ok(None) })
        .collect()
}

#[derive(Debug, Clone, Default)]
struct Tally {
    ret: f64,
    length: usize,
    own: usize,
    opp: usize,
    failed: usize,
}

/// Runs `spec` for one seed under `coord`.
pub fn run(spec: &RunSpec, coord: &mut dyn Coordinator, seed: u64) -> Result<RunOutput> {
    run_with_agents(spec, coord, seed, spec.agents(seed)?)
}

/// [`run`] starting from the given learners.
pub fn run_with_agents(
    spec: &RunSpec,
    coord: &mut dyn Coordinator,
    seed: u64,
    mut agents: Vec<DqnAgent>,
) -> Result<RunOutput> {
    spec.validate()?;
    let mut arena = spec.arena(seed);
    let n = arena.n_agents();
    if agents.len() != n {
        return Err(Error::Config(format!("{} learners for {n} agents", agents.len())));
    }
    let mut returns: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut out = RunOutput {
        method: coord.name().to_string(),
        episodes: Vec::with_capacity(n * spec.total_episodes()),
        transfers: Vec::new(),
        budget: Vec::new(),
        agents: Vec::new(),
    };
    for episode in 0..spec.total_episodes() {
        let training = episode < spec.train_episodes;
        let mut obs = arena.reset();
        let mut tally = vec![Tally::default(); n];
        while !arena.episode_done() {
            let active: Vec<bool> = (0..n).map(|i| arena.is_active(i)).collect();
            let actions = if training {
                coord.act(&mut agents, &obs, &active)?
            } else {
                greedy_actions(&agents, &obs, &active)?
            };
            let results = arena.step(&actions)?;
            for (i, res) in results.into_iter().enumerate() {
                let (Some(a), Some(res)) = (actions[i], res) else {
                    continue;
                };
                let t = &mut tally[i];
                t.ret += res.reward;
                t.length += 1;
                match res.info.catch {
                    Some(CatchOutcome::OwnPrey) => t.own += 1,
                    Some(CatchOutcome::OpponentPrey) => t.opp += 1,
                    Some(CatchOutcome::Failed) => t.failed += 1,
                    None => {}
                }
                if training {
                    let tr = Arc::new(Transition {
                        s: std::mem::take(&mut obs[i]),
                        a,
                        r: res.reward,
                        s_next: res.next_observation.clone(),
                        done: res.terminal,
                    });
                    coord.on_transition(i, &tr)?;
                    agents[i].remember(tr);
                    if let Some(batch) = agents[i].train()? {
                        coord.after_train(i, &batch)?;
                    }
                }
                obs[i] = res.next_observation;
            }
        }
        let outcome = arena.outcome();
        for (i, t) in tally.iter().enumerate() {
            let team = arena.team(i);
            returns[i].push(t.ret);
            out.episodes.push(EpisodeRow {
                agent: i,
                team,
                episode,
                ret: t.ret,
                length: t.length,
                own_catches: t.own,
                opp_catches: t.opp,
                failed_catches: t.failed,
                outcome: EpisodeOutcome::for_team(outcome, team),
                phase: if training { Phase::Train } else { Phase::Test },
            });
        }
        if training {
            agents.iter_mut().for_each(DqnAgent::end_episode);
            coord.end_episode(episode, &mut agents, &returns)?;
            if let Some(used) = coord.budget_used() {
                out.budget.extend(used.into_iter().map(|(agent, used)| BudgetRow { episode, agent, used }));
            }
        }
    }
    out.transfers = coord.take_transfers();
    out.agents = agents;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_mtpp(episodes: usize, test: usize) -> RunSpec {
        let mut s = RunSpec::predator_prey(episodes, test);
        s.max_steps = 15;
        s
    }

    #[test]
    fn outcome_from_each_side() {
        let red = Some(Team::Red);
        let green = Some(Team::Green);
        let win = Some(MatchOutcome::Win(Team::Red));
        assert_eq!(EpisodeOutcome::for_team(win, red), EpisodeOutcome::Win);
        assert_eq!(EpisodeOutcome::for_team(win, green), EpisodeOutcome::Loss);
        assert_eq!(EpisodeOutcome::for_team(Some(MatchOutcome::Draw), red), EpisodeOutcome::Draw);
        assert_eq!(EpisodeOutcome::for_team(Some(MatchOutcome::Timeout), red), EpisodeOutcome::Timeout);
        assert_eq!(EpisodeOutcome::for_team(None, None), EpisodeOutcome::None);
        for o in [EpisodeOutcome::None, EpisodeOutcome::Win, EpisodeOutcome::Loss, EpisodeOutcome::Draw, EpisodeOutcome::Timeout] {
            assert_eq!(EpisodeOutcome::from_name(o.name()), Some(o));
        }
        assert_eq!(EpisodeOutcome::Draw.win_credit(), 0.5);
    }

    #[test]
    fn predator_prey_rows_and_teams() {
        let spec = tiny_mtpp(3, 1);
        let out = run(&spec, &mut NoTransfer, 2).unwrap();
        assert_eq!(out.episodes.len(), 3 * 8);
        assert_eq!(spec.members(), vec![0, 1, 2, 3]);
        for r in &out.episodes {
            assert_eq!(r.team, Some(if r.agent < 4 { Team::Red } else { Team::Green }));
            assert_eq!(r.phase, if r.episode < 2 { Phase::Train } else { Phase::Test });
            assert!(r.length <= 15);
            assert_ne!(r.outcome, EpisodeOutcome::None);
        }
    }

    #[test]
    fn test_phase_is_frozen_and_greedy() {
        let trained = run(&tiny_mtpp(3, 0), &mut NoTransfer, 4).unwrap();
        let tested = run(&tiny_mtpp(5, 2), &mut NoTransfer, 4).unwrap();
        for (a, b) in trained.agents.iter().zip(&tested.agents) {
            assert_eq!(a.net().online().params_flat(), b.net().online().params_flat());
            assert_eq!(a.replay().len(), b.replay().len());
            assert_eq!(a.epsilon().episodes(), b.epsilon().episodes());
        }
    }

    #[test]
    fn cartpole_episodes_end_per_agent() {
        let spec = RunSpec::cartpole(4);
        let out = run(&spec, &mut NoTransfer, 1).unwrap();
        assert_eq!(out.episodes.len(), 20);
        for r in &out.episodes {
            assert_eq!(r.ret, r.length as f64);
            assert_eq!(r.team, None);
        }
        let a = run(&spec, &mut NoTransfer, 1).unwrap();
        assert_eq!(a.episodes, out.episodes);
        assert_eq!(out.returns(0).len(), 4);
    }

    #[test]
    fn mismatched_specs_are_rejected() {
        let mut spec = RunSpec::cartpole(4);
        spec.dqn = DqnConfig::predator_prey(4);
        assert!(spec.validate().is_err());
        let spec = RunSpec::cartpole(4);
        let agents = spec.agents(0).unwrap()[..2].to_vec();
        assert!(run_with_agents(&spec, &mut NoTransfer, 0, agents).is_err());
    }
}
