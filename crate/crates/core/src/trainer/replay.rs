use rand::seq::index;

use crate::envs::Transition;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Fixed-capacity ring of transitions.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
    inserted: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be >= 1".into()));
        }
        Ok(Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
            inserted: 0,
        })
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
        self.inserted += 1;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    /// `m` distinct stored transitions, uniformly at random.
    pub fn sample(&self, m: usize, rng: &mut Rng) -> Result<Vec<Transition>> {
        if m == 0 || m > self.items.len() {
            return Err(Error::Contract(format!(
                "cannot draw {m} distinct transitions from {} stored",
                self.items.len()
            )));
        }
        Ok(index::sample(rng, self.items.len(), m)
            .into_iter()
            .map(|i| self.items[i])
            .collect())
    }
}
