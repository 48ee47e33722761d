//! The transfer step and the EF-OnTL coordinator around the shared loop.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::buffer::{LabeledTransition, TransferBuffer};
use super::content::{delta_conf, hdc_select, lec_select, rdc_select, ContentSelection};
use super::source::{select_source_by_performance, select_source_by_uncertainty, SourceSelection};
use crate::agent::{DqnAgent, Transition};
use crate::rng::{self, Stream};
use crate::runner::Coordinator;
use crate::uncertainty::{EstimatorConfig, EstimatorKind, RndEstimator};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferConfig {
    pub n_agents: usize,
    /// Episodes between transfers (TF).
    pub transfer_frequency: usize,
    pub buffer_capacity: usize,
    pub source_selection: SourceSelection,
    pub content_selection: ContentSelection,
    /// Tuples each target may take per transfer (B).
    pub budget: usize,
    pub start_episode: usize,
    /// Recent episodes averaged by best-performance election (E).
    #[serde(default = "default_perf_window")]
    pub perf_window: usize,
}

fn default_perf_window() -> usize {
    100
}

impl TransferConfig {
    pub fn cartpole() -> Self {
        Self {
            n_agents: 5,
            transfer_frequency: 200,
            buffer_capacity: 10_000,
            source_selection: SourceSelection::AvgUncertainty,
            content_selection: ContentSelection::Hdc,
            budget: 5_000,
            start_episode: 600,
            perf_window: default_perf_window(),
        }
    }

    pub fn predator_prey(ss: SourceSelection, tcs: ContentSelection, budget: usize) -> Self {
        Self {
            n_agents: 4,
            transfer_frequency: 300,
            buffer_capacity: 100_000,
            source_selection: ss,
            content_selection: tcs,
            budget,
            start_episode: 2_500,
            perf_window: default_perf_window(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_agents < 2 {
            return Err(Error::Config("transfer needs at least two agents".into()));
        }
        if self.transfer_frequency == 0 {
            return Err(Error::Config("transfer_frequency must be at least 1".into()));
        }
        if self.buffer_capacity == 0 {
            return Err(Error::Config("buffer_capacity must be positive".into()));
        }
        if self.budget > self.buffer_capacity {
            return Err(Error::Config(format!(
                "budget {} exceeds buffer capacity {}",
                self.budget, self.buffer_capacity
            )));
        }
        if self.source_selection == SourceSelection::BestPerformance && self.perf_window == 0 {
            return Err(Error::Config("perf_window must be positive".into()));
        }
        Ok(())
    }

    /// Whether transfer runs on the barrier after 0-based episode `k`.
    pub fn should_fire(&self, k: usize) -> bool {
        k >= self.start_episode && k > 0 && k.is_multiple_of(self.transfer_frequency)
    }
}

/// What one target took from the source.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetRecord {
    pub target_id: usize,
    pub batch_size: usize,
    /// Mean Δ-conf over the batch; 0 for an empty batch.
    pub mean_delta_conf: f64,
    /// Mean |TD error| of the batch under the target before it trained on it.
    pub mean_abs_td: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferRecord {
    pub episode: usize,
    pub source_id: usize,
    pub targets: Vec<TargetRecord>,
}

/// Positions in `src` a target would take, given its estimator and learner.
pub fn select_content<R: Rng + ?Sized>(
    tcs: ContentSelection,
    src: &TransferBuffer,
    target_estimator: &RndEstimator,
    target: &DqnAgent,
    budget: usize,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<f64>)> {
    if budget == 0 || src.is_empty() {
        return Ok((Vec::new(), Vec::new()));
    }
    let items = src.transitions();
    let delta = delta_conf(&target_estimator.estimate_transitions(&items)?, &src.labels());
    let picked = match tcs {
        ContentSelection::Rdc => rdc_select(&delta, budget, rng),
        ContentSelection::Hdc => hdc_select(&delta, budget),
        ContentSelection::Lec => {
            let td: Vec<f64> = target.net().td_errors(&items)?.into_iter().map(f64::abs).collect();
            lec_select(&delta, &td, budget)
        }
    };
    Ok((picked, delta))
}

fn mean(v: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = v.len();
    if n == 0 {
        0.0
    } else {
        v.sum::<f64>() / n as f64
    }
}

/// One transfer over the agents listed in `members`.
///
/// `estimators`, `buffers` and `histories` are indexed by member position;
/// `agents` by global id. The elected source is left untouched; every other
/// member filters the source buffer and trains once on what it took.
#[allow(clippy::too_many_arguments)]
pub fn transfer_step<R: Rng + ?Sized>(
    episode: usize,
    members: &[usize],
    agents: &mut [DqnAgent],
    estimators: &[RndEstimator],
    buffers: &[TransferBuffer],
    histories: &[Vec<f64>],
    cfg: &TransferConfig,
    rng: &mut R,
) -> Result<TransferRecord> {
    if members.len() != estimators.len() || members.len() != buffers.len() {
        return Err(Error::Config(format!(
            "{} members, {} estimators, {} buffers",
            members.len(),
            estimators.len(),
            buffers.len()
        )));
    }
    let src = match cfg.source_selection {
        SourceSelection::AvgUncertainty => select_source_by_uncertainty(buffers)?,
        SourceSelection::BestPerformance => {
            let h: Vec<Vec<f64>> = members
                .iter()
                .map(|&m| histories.get(m).cloned().ok_or(Error::UnknownAgent(m)))
                .collect::<Result<_>>()?;
            select_source_by_performance(&h, cfg.perf_window)?
        }
    };
    let source = &buffers[src];
    let mut targets = Vec::with_capacity(members.len() - 1);
    for (pos, &id) in members.iter().enumerate() {
        if pos == src {
            continue;
        }
        let agent = agents.get_mut(id).ok_or(Error::UnknownAgent(id))?;
        let (picked, delta) =
            select_content(cfg.content_selection, source, &estimators[pos], agent, cfg.budget, rng)?;
        let batch: Vec<&Transition> =
            picked.iter().map(|&i| source.get(i).expect("selected in range").transition.as_ref()).collect();
        let mean_abs_td = if batch.is_empty() {
            0.0
        } else {
            let td = agent.net().td_errors(&batch)?;
            mean(td.into_iter().map(f64::abs))
        };
        agent.net_mut().train_on_external(&batch)?;
        targets.push(TargetRecord {
            target_id: id,
            batch_size: batch.len(),
            mean_delta_conf: mean(picked.iter().map(|&i| delta[i])),
            mean_abs_td,
        });
    }
    Ok(TransferRecord {
        episode,
        source_id: members[src],
        targets,
    })
}

/// Expert-free online transfer among `members`.
///
/// Each member labels every fresh interaction with its own sars-RND estimate
/// before training the estimator on it, and keeps the labelled tuple in its
/// transfer buffer. Agents outside `members` play on as plain learners.
#[derive(Debug, Clone)]
pub struct Efontl {
    cfg: TransferConfig,
    members: Vec<usize>,
    /// Member position of each global agent id.
    slot: Vec<Option<usize>>,
    estimators: Vec<RndEstimator>,
    buffers: Vec<TransferBuffer>,
    rng: crate::rng::Rng,
    records: Vec<TransferRecord>,
}

impl Efontl {
    pub fn new(
        cfg: TransferConfig,
        members: Vec<usize>,
        obs_dim: usize,
        n_actions: usize,
        est: &EstimatorConfig,
        seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        if members.len() != cfg.n_agents {
            return Err(Error::Config(format!(
                "transfer configured for {} agents, {} members given",
                cfg.n_agents,
                members.len()
            )));
        }
        let n_slots = members.iter().max().map_or(0, |m| m + 1);
        let mut slot = vec![None; n_slots];
        for (pos, &m) in members.iter().enumerate() {
            if slot[m].replace(pos).is_some() {
                return Err(Error::Config(format!("agent {m} listed twice")));
            }
        }
        let estimators = members
            .iter()
            .map(|&m| RndEstimator::for_agent(EstimatorKind::Transition, obs_dim, n_actions, est, seed, m as u64))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            buffers: (0..members.len()).map(|_| TransferBuffer::new(cfg.buffer_capacity)).collect(),
            cfg,
            members,
            slot,
            estimators,
            rng: rng::stream(seed, Stream::TransferSampling, 0),
            records: Vec::new(),
        })
    }

    pub fn config(&self) -> &TransferConfig {
        &self.cfg
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn buffers(&self) -> &[TransferBuffer] {
        &self.buffers
    }

    pub fn estimators(&self) -> &[RndEstimator] {
        &self.estimators
    }

    pub fn records(&self) -> &[TransferRecord] {
        &self.records
    }
}

impl Coordinator for Efontl {
    fn name(&self) -> &'static str {
        "efontl"
    }

    fn on_transition(&mut self, agent: usize, t: &Arc<Transition>) -> Result<()> {
        let Some(pos) = self.slot.get(agent).copied().flatten() else {
            return Ok(());
        };
        let est = &mut self.estimators[pos];
        let x = est.encode(t)?;
        // The pre-step loss is the estimate of t before the estimator learns it.
        let u = est.update(&x)?;
        self.buffers[pos].push(LabeledTransition {
            transition: Arc::clone(t),
            u,
        });
        Ok(())
    }

    fn end_episode(&mut self, episode: usize, agents: &mut [DqnAgent], returns: &[Vec<f64>]) -> Result<()> {
        if !self.cfg.should_fire(episode) {
            return Ok(());
        }
        let rec = transfer_step(
            episode,
            &self.members,
            agents,
            &self.estimators,
            &self.buffers,
            returns,
            &self.cfg,
            &mut self.rng,
        )?;
        self.records.push(rec);
        Ok(())
    }

    fn take_transfers(&mut self) -> Vec<TransferRecord> {
        std::mem::take(&mut self.records)
    }
}
