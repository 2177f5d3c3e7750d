//! Non-random workloads from explicit-state exploration.
//!
//! A [`Model`] is a set of automata running in parallel. [`explore`] walks
//! its composite state space breadth first and records the code of every
//! successor it generates, revisits included, which is exactly the stream of
//! find-or-insert requests an explorer sends to its visited set.

mod explore;
mod model;

use alloc::vec::Vec;

use hashbrown::HashSet;

pub use explore::{encode, explore, Encoder};
pub use model::{Automaton, Model, ParseError, ParseErrorKind, Transition};

/// Width of a state code; the top bit of every code is zero.
pub const CODE_BITS: u32 = 31;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("model has {states} composite states, more than fit in {CODE_BITS} bits")]
    CodeSpace { states: u64 },
    #[error("state vector has {got} entries, model has {expected} processes")]
    Arity { expected: usize, got: usize },
    #[error("process {process} has {states} states, got local state {state}")]
    LocalState {
        process: usize,
        state: u32,
        states: u32,
    },
}

/// An ordered find-or-insert sequence plus its duplication statistics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    codes: Vec<u32>,
    unique_count: usize,
    reachable_states: Option<usize>,
}

impl Trace {
    /// Wraps an arbitrary code sequence, counting its distinct values.
    pub fn from_codes(codes: Vec<u32>) -> Self {
        let unique_count = codes.iter().collect::<HashSet<_>>().len();
        Self {
            codes,
            unique_count,
            reachable_states: None,
        }
    }

    pub(crate) fn with_reachable(codes: Vec<u32>, reachable: usize) -> Self {
        Self {
            reachable_states: Some(reachable),
            ..Self::from_codes(codes)
        }
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn into_codes(self) -> Vec<u32> {
        self.codes
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// Number of distinct codes in the sequence.
    pub fn unique_count(&self) -> usize {
        self.unique_count
    }

    /// Size of the explorer's visited set, initial state included. Only
    /// known for traces produced by [`explore`].
    pub fn reachable_states(&self) -> usize {
        self.reachable_states.unwrap_or(self.unique_count)
    }

    /// Average number of occurrences of each distinct code.
    pub fn mean_multiplicity(&self) -> f64 {
        if self.unique_count == 0 {
            0.0
        } else {
            self.codes.len() as f64 / self.unique_count as f64
        }
    }
}
