use std::collections::VecDeque;
use std::sync::Arc;

use rand::Rng;

/// One agent-environment interaction.
///
/// `done` marks a true terminal state: the learner does not bootstrap past it.
/// An episode cut by a step limit is not `done`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub s: Vec<f64>,
    pub a: usize,
    pub r: f64,
    pub s_next: Vec<f64>,
    pub done: bool,
}

/// Bounded experience replay, oldest-first eviction.
///
/// Items are reference-counted so the same interaction can sit in the replay
/// and in a transfer buffer without being copied.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Arc<Transition>>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: VecDeque::with_capacity(capacity.min(1 << 16)),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: impl Into<Arc<Transition>>) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t.into());
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter().map(|t| t.as_ref())
    }

    /// Uniform sample of `n` distinct items (all of them if fewer are stored).
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<&Transition> {
        self.sample_indices(n, rng).into_iter().map(|i| self.items[i].as_ref()).collect()
    }

    /// Like [`sample`](Self::sample) but returns shared handles.
    pub fn sample_shared<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Arc<Transition>> {
        self.sample_indices(n, rng).into_iter().map(|i| Arc::clone(&self.items[i])).collect()
    }

    fn sample_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        let n = n.min(self.items.len());
        rand::seq::index::sample(rng, self.items.len(), n).into_vec()
    }
}
