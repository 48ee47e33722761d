use serde::{Deserialize, Serialize};

use super::buffer::TransferBuffer;
use crate::{Error, Result};

/// How the transfer source is elected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceSelection {
    /// Lowest mean uncertainty over the agent's transfer buffer (Ū).
    #[serde(alias = "u")]
    AvgUncertainty,
    /// Highest mean undiscounted return over the last `E` episodes (BP).
    #[serde(alias = "bp")]
    BestPerformance,
}

impl SourceSelection {
    pub fn short_name(self) -> &'static str {
        match self {
            SourceSelection::AvgUncertainty => "u",
            SourceSelection::BestPerformance => "bp",
        }
    }
}

/// Index of the smallest value, lowest index on ties.
pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

pub fn select_source_by_uncertainty(buffers: &[TransferBuffer]) -> Result<usize> {
    if buffers.is_empty() {
        return Err(Error::NoCandidates);
    }
    let means = buffers
        .iter()
        .enumerate()
        .map(|(i, b)| b.mean_uncertainty().ok_or(Error::EmptyBuffer(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(argmin(&means))
}

pub fn select_source_by_performance(histories: &[Vec<f64>], window: usize) -> Result<usize> {
    if histories.is_empty() {
        return Err(Error::NoCandidates);
    }
    let means = histories
        .iter()
        .enumerate()
        .map(|(i, h)| {
            if window == 0 || h.len() < window {
                return Err(Error::ShortHistory {
                    agent: i,
                    len: h.len(),
                    window,
                });
            }
            Ok(h[h.len() - window..].iter().sum::<f64>() / window as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    // argmax with lowest-id ties
    let mut best = 0;
    for (i, &m) in means.iter().enumerate().skip(1) {
        if m > means[best] {
            best = i;
        }
    }
    Ok(best)
}
