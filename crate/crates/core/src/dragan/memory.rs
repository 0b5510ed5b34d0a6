use rand::Rng as _;

use crate::rng::Rng;

/// Bounded store of `(flattened batch, achieved score)` pairs. When full, a
/// uniformly chosen existing entry is overwritten.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayMemory {
    entries: Vec<(Vec<f64>, f64)>,
    capacity: usize,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        Self {
            entries: Vec::new(),
            capacity: capacity.max(1),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(Vec<f64>, f64)] {
        &self.entries
    }

    /// Returns the index of the evicted entry, if any.
    pub fn push(&mut self, batch: Vec<f64>, score: f64, rng: &mut Rng) -> Option<usize> {
        if self.entries.len() < self.capacity {
            self.entries.push((batch, score));
            None
        } else {
            let victim = rng.random_range(0..self.entries.len());
            self.entries[victim] = (batch, score);
            Some(victim)
        }
    }
}
