use super::budget::AdviceBudget;
use super::jury::ExpertJury;
use crate::agent::{DqnAgent, EnsembleQNet, Minibatch};
use crate::rng::{self, Stream};
use crate::runner::{self, Coordinator, RunOutput, RunSpec};
use crate::{Error, Result};

/// The jury's majority action when the student's head disagreement exceeds
/// `threshold` and budget remains; `None` otherwise.
pub fn rcmp_step(
    student: &EnsembleQNet,
    jury: &ExpertJury,
    s: &[f64],
    threshold: f64,
    budget: &mut AdviceBudget,
) -> Result<Option<usize>> {
    if !budget.has_remaining() || student.uncertainty(s)? <= threshold {
        return Ok(None);
    }
    let a = jury.advise(s)?;
    budget.spend();
    Ok(Some(a))
}

/// Expert-jury advising for the agents in `members`.
///
/// Each student keeps a multi-head ensemble next to its acting network and fits
/// it on the very minibatches the acting network trains on; the ensemble only
/// measures uncertainty.
#[derive(Debug, Clone)]
pub struct Rcmp {
    members: Vec<usize>,
    slot: Vec<Option<usize>>,
    ensembles: Vec<EnsembleQNet>,
    jury: ExpertJury,
    threshold: f64,
    budgets: Vec<AdviceBudget>,
}

impl Rcmp {
    pub const DEFAULT_THRESHOLD: f64 = 0.02;

    pub fn new(spec: &RunSpec, members: Vec<usize>, jury: ExpertJury, threshold: f64, budget: usize, seed: u64) -> Result<Self> {
        if jury.n_actions() != spec.n_actions() {
            return Err(Error::Config("jury and students disagree on the action space".into()));
        }
        let n_slots = members.iter().max().map_or(0, |m| m + 1);
        let mut slot = vec![None; n_slots];
        for (pos, &m) in members.iter().enumerate() {
            if slot[m].replace(pos).is_some() {
                return Err(Error::Config(format!("agent {m} listed twice")));
            }
        }
        let ensembles = members
            .iter()
            .map(|&m| {
                let mut r = rng::stream(seed, Stream::EnsembleInit, m as u64);
                EnsembleQNet::new(&spec.dqn.qnet, EnsembleQNet::DEFAULT_HEADS, &mut r)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            budgets: vec![AdviceBudget::new(budget); members.len()],
            members,
            slot,
            ensembles,
            jury,
            threshold,
        })
    }

    pub fn budgets(&self) -> &[AdviceBudget] {
        &self.budgets
    }

    pub fn jury(&self) -> &ExpertJury {
        &self.jury
    }

    pub fn ensembles(&self) -> &[EnsembleQNet] {
        &self.ensembles
    }
}

impl Coordinator for Rcmp {
    fn name(&self) -> &'static str {
        "rcmp"
    }

    fn act(&mut self, agents: &mut [DqnAgent], obs: &[Vec<f64>], active: &[bool]) -> Result<Vec<Option<usize>>> {
        let mut out = Vec::with_capacity(agents.len());
        for (i, agent) in agents.iter_mut().enumerate() {
            if !active[i] {
                out.push(None);
                continue;
            }
            let advised = match self.slot.get(i).copied().flatten() {
                Some(pos) => rcmp_step(&self.ensembles[pos], &self.jury, &obs[i], self.threshold, &mut self.budgets[pos])?,
                None => None,
            };
            out.push(Some(match advised {
                Some(a) => a,
                None => agent.act(&obs[i])?,
            }));
        }
        Ok(out)
    }

    fn after_train(&mut self, agent: usize, batch: &Minibatch) -> Result<()> {
        if let Some(pos) = self.slot.get(agent).copied().flatten() {
            self.ensembles[pos].train_step(&batch.refs())?;
        }
        Ok(())
    }

    fn budget_used(&self) -> Option<Vec<(usize, usize)>> {
        Some(self.members.iter().zip(&self.budgets).map(|(&m, b)| (m, b.used())).collect())
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub threshold: f64,
    /// One run per seed, in seed order.
    pub runs: Vec<RunOutput>,
}

impl SweepResult {
    /// Total advice used by all students at the end of each training episode,
    /// averaged over seeds.
    pub fn mean_cumulative_budget(&self) -> Vec<f64> {
        let Some(first) = self.runs.first() else {
            return Vec::new();
        };
        let n_ep = first.budget.iter().map(|b| b.episode + 1).max().unwrap_or(0);
        let mut total = vec![0.0; n_ep];
        for run in &self.runs {
            for b in &run.budget {
                total[b.episode] += b.used as f64;
            }
        }
        total.iter().map(|t| t / self.runs.len() as f64).collect()
    }
}

/// RCMP runs of `spec` for each threshold and seed, all students advised by
/// the same jury.
pub fn rcmp_threshold_sweep(
    spec: &RunSpec,
    jury: &ExpertJury,
    thresholds: &[f64],
    budget: usize,
    seeds: &[u64],
) -> Result<Vec<SweepResult>> {
    thresholds
        .iter()
        .map(|&threshold| {
            let runs = seeds
                .iter()
                .map(|&seed| {
                    let mut coord = Rcmp::new(spec, spec.members(), jury.clone(), threshold, budget, seed)?;
                    runner::run(spec, &mut coord, seed)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepResult { threshold, runs })
        })
        .collect()
}
