use std::collections::VecDeque;
use std::rc::Rc;

use rand::Rng;

use crate::env::{Action, ActionMask};

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub state: Rc<[f64]>,
    pub action: Action,
    /// Negated step cost.
    pub reward: f64,
    pub next_state: Rc<[f64]>,
    pub done: bool,
    /// Feasible actions in `next_state`; all false when `done`.
    pub next_mask: ActionMask,
}

/// Fixed-capacity experience store with FIFO eviction.
#[derive(Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    entries: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            entries: VecDeque::with_capacity(capacity.min(1 << 16)),
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.capacity == 0 {
            return;
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(t);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.entries.iter()
    }

    /// Uniform sample with replacement.
    pub fn sample<'a>(&'a self, batch: usize, rng: &mut impl Rng) -> Vec<&'a Transition> {
        if self.entries.is_empty() {
            return Vec::new();
        }
        (0..batch)
            .map(|_| &self.entries[rng.gen_range(0..self.entries.len())])
            .collect()
    }
}

/// Experience store used by training: one uniform FIFO, or one FIFO per
/// action with every batch split evenly between them.
#[derive(Debug)]
pub enum Replay {
    Uniform(ReplayBuffer),
    Balanced([ReplayBuffer; 2]),
}

impl Replay {
    /// `capacity` applies to each per-action store when `balanced`.
    pub fn new(capacity: usize, balanced: bool) -> Self {
        if balanced {
            Replay::Balanced([ReplayBuffer::new(capacity), ReplayBuffer::new(capacity)])
        } else {
            Replay::Uniform(ReplayBuffer::new(capacity))
        }
    }

    pub fn push(&mut self, t: Transition) {
        match self {
            Replay::Uniform(b) => b.push(t),
            Replay::Balanced(bs) => bs[t.action.index()].push(t),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Replay::Uniform(b) => b.len(),
            Replay::Balanced(bs) => bs.iter().map(ReplayBuffer::len).sum(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// With replacement. A balanced store draws `batch / 2` from each action
    /// (the odd one from the first), or all from one side if the other is empty.
    pub fn sample<'a>(&'a self, batch: usize, rng: &mut impl Rng) -> Vec<&'a Transition> {
        match self {
            Replay::Uniform(b) => b.sample(batch, rng),
            Replay::Balanced([a, b]) => {
                if a.is_empty() {
                    return b.sample(batch, rng);
                }
                if b.is_empty() {
                    return a.sample(batch, rng);
                }
                let half = batch / 2;
                let mut out = a.sample(batch - half, rng);
                out.extend(b.sample(half, rng));
                out
            }
        }
    }
}
