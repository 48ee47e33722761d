use std::sync::Arc;

use super::budget::AdviceBudget;
use crate::agent::{majority_vote, DqnAgent, Transition};
use crate::runner::{explore_actions, Coordinator};
use crate::uncertainty::{EstimatorConfig, EstimatorKind, RndEstimator};
use crate::{Error, Result};

/// The member with the highest uncertainty, if it still has budget.
///
/// `u[i]` is `None` for members not acting this step. Ties go to the lowest
/// position.
pub fn ocmas_seeker(u: &[Option<f64>], budgets: &[AdviceBudget]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in u.iter().enumerate() {
        if let Some(v) = v {
            if best.is_none_or(|b| *v > u[b].expect("best is acting")) {
                best = Some(i);
            }
        }
    }
    best.filter(|&b| budgets[b].has_remaining())
}

/// One OCMAS decision over the agents in `members`.
///
/// Every member's own state estimator scores its own state. The most
/// uncertain member, budget permitting, takes the majority greedy action the
/// other members propose for its state; everybody else, members or not, acts
/// ε-greedily. Returns the joint action and the seeker's global id.
pub fn ocmas_step(
    agents: &mut [DqnAgent],
    members: &[usize],
    estimators: &[RndEstimator],
    obs: &[Vec<f64>],
    active: &[bool],
    budgets: &mut [AdviceBudget],
) -> Result<(Vec<Option<usize>>, Option<usize>)> {
    let u = members
        .iter()
        .zip(estimators)
        .map(|(&m, est)| {
            if *active.get(m).ok_or(Error::UnknownAgent(m))? {
                est.estimate(&obs[m]).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let seeker = ocmas_seeker(&u, budgets).filter(|_| members.len() > 1);
    let Some(pos) = seeker else {
        return Ok((explore_actions(agents, obs, active)?, None));
    };
    let id = members[pos];
    let votes = members
        .iter()
        .filter(|&&m| m != id)
        .map(|&m| agents[m].greedy(&obs[id]))
        .collect::<Result<Vec<_>>>()?;
    let advised = majority_vote(&votes, agents[id].n_actions());
    budgets[pos].spend();
    let mut others = active.to_vec();
    others[id] = false;
    let mut actions = explore_actions(agents, obs, &others)?;
    actions[id] = Some(advised);
    Ok((actions, Some(id)))
}

/// Online confidence-moderated advice sharing among `members`.
#[derive(Debug, Clone)]
pub struct Ocmas {
    members: Vec<usize>,
    slot: Vec<Option<usize>>,
    estimators: Vec<RndEstimator>,
    budgets: Vec<AdviceBudget>,
    advised: usize,
}

impl Ocmas {
    pub const DEFAULT_BUDGET: usize = 10_000;

    pub fn new(
        members: Vec<usize>,
        obs_dim: usize,
        n_actions: usize,
        est: &EstimatorConfig,
        budget: usize,
        seed: u64,
    ) -> Result<Self> {
        let n_slots = members.iter().max().map_or(0, |m| m + 1);
        let mut slot = vec![None; n_slots];
        for (pos, &m) in members.iter().enumerate() {
            if slot[m].replace(pos).is_some() {
                return Err(Error::Config(format!("agent {m} listed twice")));
            }
        }
        let estimators = members
            .iter()
            .map(|&m| RndEstimator::for_agent(EstimatorKind::State, obs_dim, n_actions, est, seed, m as u64))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            budgets: vec![AdviceBudget::new(budget); members.len()],
            members,
            slot,
            estimators,
            advised: 0,
        })
    }

    pub fn budgets(&self) -> &[AdviceBudget] {
        &self.budgets
    }

    /// Advised actions handed out so far.
    pub fn advised(&self) -> usize {
        self.advised
    }
}

impl Coordinator for Ocmas {
    fn name(&self) -> &'static str {
        "ocmas"
    }

    fn act(&mut self, agents: &mut [DqnAgent], obs: &[Vec<f64>], active: &[bool]) -> Result<Vec<Option<usize>>> {
        let (actions, seeker) = ocmas_step(agents, &self.members, &self.estimators, obs, active, &mut self.budgets)?;
        self.advised += usize::from(seeker.is_some());
        Ok(actions)
    }

    fn on_transition(&mut self, agent: usize, t: &Arc<Transition>) -> Result<()> {
        if let Some(pos) = self.slot.get(agent).copied().flatten() {
            let est = &mut self.estimators[pos];
            let x = est.encode(t)?;
            est.update(&x)?;
        }
        Ok(())
    }

    fn budget_used(&self) -> Option<Vec<(usize, usize)>> {
        Some(self.members.iter().zip(&self.budgets).map(|(&m, b)| (m, b.used())).collect())
    }
}
