use std::collections::VecDeque;
use std::sync::Arc;

use crate::agent::Transition;

/// An interaction plus the uncertainty its collector assigned at the time.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTransition {
    pub transition: Arc<Transition>,
    pub u: f64,
}

/// Bounded FIFO of labelled interactions; new items push out the oldest.
#[derive(Debug, Clone)]
pub struct TransferBuffer {
    capacity: usize,
    items: VecDeque<LabeledTransition>,
}

impl TransferBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "transfer buffer capacity must be positive");
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

    pub fn push(&mut self, item: LabeledTransition) {
        debug_assert!(item.u.is_finite());
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(item);
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &LabeledTransition> {
        self.items.iter()
    }

    pub fn get(&self, i: usize) -> Option<&LabeledTransition> {
        self.items.get(i)
    }

    pub fn labels(&self) -> Vec<f64> {
        self.items.iter().map(|l| l.u).collect()
    }

    pub fn transitions(&self) -> Vec<&Transition> {
        self.items.iter().map(|l| l.transition.as_ref()).collect()
    }

    pub fn mean_uncertainty(&self) -> Option<f64> {
        if self.items.is_empty() {
            return None;
        }
        Some(self.items.iter().map(|l| l.u).sum::<f64>() / self.items.len() as f64)
    }
}
