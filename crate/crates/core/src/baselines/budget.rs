use serde::{Deserialize, Serialize};

/// Cap on advised actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdviceBudget {
    total: usize,
    used: usize,
}

impl AdviceBudget {
    pub fn new(total: usize) -> Self {
        Self { total, used: 0 }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn used(&self) -> usize {
        self.used
    }

    pub fn remaining(&self) -> usize {
        self.total - self.used
    }

    pub fn has_remaining(&self) -> bool {
        self.used < self.total
    }

    /// Records one advised action; false if nothing is left.
    pub fn spend(&mut self) -> bool {
        if self.has_remaining() {
            self.used += 1;
            true
        } else {
            false
        }
    }
}
