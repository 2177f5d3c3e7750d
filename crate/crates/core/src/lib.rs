//! Concurrent find-or-insert hash tables for state-space exploration
//! workloads.
//!
//! * [`hashfamily`]: seeded multiply-mod-prime hash functions.
//! * [`cuckoo`]: cuckoo hashing with eviction chains, a stash and rebuild.
//! * [`bucket`]: 32-word buckets holding fixed-width vectors, claimed
//!   frame by frame with compare-and-swap.
//! * [`trace`]: networks of automata, a BFS explorer that records every
//!   successor it generates, and the state encoder.
//! * [`workload`]: random sequences with a controlled duplication factor.
//!
//! The crate is `no_std` + `alloc`. The default `std` feature only swaps the
//! insertion lock and the spin back-off for their std counterparts; build
//! with `default-features = false, features = ["spin"]` for bare targets.
#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_debug_implementations, rust_2018_idioms, unused_qualifications)]

extern crate alloc;

pub mod bucket;
pub mod cuckoo;
pub mod hashfamily;
mod sync;
pub mod trace;
pub mod workload;

pub use bucket::{BucketOutcome, BucketTable};
pub use cuckoo::{CuckooTable, InsertOutcome};
pub use hashfamily::{HashFamily, HashParams};

/// Table size relative to the number of unique keys.
pub const DEFAULT_SCALE: f64 = 1.25;

/// What a find-or-insert call did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Inserted,
    Found,
    TableFull,
}

/// `ceil(n * scale)`, tolerant of the rounding error in products such as
/// `10 * 1.2`.
pub fn ceil_scaled(n: usize, scale: f64) -> usize {
    let exact = n as f64 * scale;
    let nudged = exact - exact * 1e-12;
    let floor = nudged as usize;
    if (floor as f64) < nudged {
        floor + 1
    } else {
        floor
    }
}
