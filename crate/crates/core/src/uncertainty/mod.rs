//! Epistemic uncertainty from random network distillation: plain RND over
//! states and sars-RND over whole interactions.

mod rnd;
mod spike;

#[cfg(test)]
mod tests;

pub use rnd::{EstimatorConfig, EstimatorKind, RndEstimator};
pub use spike::{
    check_spike, spike_experiment, spike_fixture, spike_script, spike_table, spike_trace, SpikeCheck, SpikeTrace,
    FIRST_CHANGE, SECOND_CHANGE, SPIKE_HEADER, SPIKE_SCRIPT,
};
