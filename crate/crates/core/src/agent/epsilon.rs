use rand::Rng;
use serde::{Deserialize, Serialize};

/// Linear per-episode ε annealing, floored at `end`.
///
/// The value is recomputed from the episode count rather than decremented, so
/// `current()` after `k` episodes is exactly
/// `max(end, start - k * (start - end) / total_episodes)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub total_episodes: usize,
    #[serde(default)]
    episodes: usize,
}

impl EpsilonSchedule {
    pub fn new(start: f64, end: f64, total_episodes: usize) -> Self {
        assert!((0.0..=1.0).contains(&start) && (0.0..=1.0).contains(&end));
        assert!(total_episodes > 0);
        Self {
            start,
            end,
            total_episodes,
            episodes: 0,
        }
    }

    pub fn step_size(&self) -> f64 {
        (self.start - self.end) / self.total_episodes as f64
    }

    pub fn at(&self, k: usize) -> f64 {
        (self.start - k as f64 * self.step_size()).max(self.end)
    }

    pub fn current(&self) -> f64 {
        self.at(self.episodes)
    }

    pub fn episodes(&self) -> usize {
        self.episodes
    }

    pub fn advance(&mut self) {
        self.episodes += 1;
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// ε-greedy over `q`. Always draws one uniform so the stream advances by the
/// same amount whatever ε is, plus one more draw when exploring.
pub fn epsilon_greedy<R: Rng + ?Sized>(q: &[f64], eps: f64, rng: &mut R) -> usize {
    if rng.random::<f64>() < eps {
        rng.random_range(0..q.len())
    } else {
        argmax(q)
    }
}

/// Most frequent action among `votes`; ties go to the lowest action index.
pub fn majority_vote(votes: &[usize], n_actions: usize) -> usize {
    let mut counts = vec![0usize; n_actions];
    for &v in votes {
        counts[v] += 1;
    }
    let mut best = 0;
    for a in 1..n_actions {
        if counts[a] > counts[best] {
            best = a;
        }
    }
    best
}
