//! Comparison methods: independent learners, OCMAS peer action advice and
//! RCMP expert-jury advice.

mod budget;
mod jury;
mod ocmas;
mod rcmp;

#[cfg(test)]
mod tests;

pub use crate::runner::NoTransfer;
pub use budget::AdviceBudget;
pub use jury::ExpertJury;
pub use ocmas::{ocmas_seeker, ocmas_step, Ocmas};
pub use rcmp::{rcmp_step, rcmp_threshold_sweep, Rcmp, SweepResult};

use crate::runner::{self, RunOutput, RunSpec};
use crate::Result;

/// Plain independent DQN training, no messages between agents.
pub fn run_no_transfer(spec: &RunSpec, seed: u64) -> Result<RunOutput> {
    runner::run(spec, &mut NoTransfer, seed)
}
