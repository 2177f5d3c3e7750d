//! A small family of universal hash functions shared by both tables.
//!
//! Each function has the form `((a * k + b) mod p) mod m`, where `p` is a
//! fixed prime just above 2^32 and `(a, b)` are drawn from a seeded
//! SplitMix64 stream. Regenerating the family (for a cuckoo rebuild) only
//! changes the `(a, b)` pairs.
//!
//! Constant derivation, for anyone reproducing a family elsewhere: seed a
//! SplitMix64 generator with the 64-bit seed as its raw state, then for each
//! function draw two 64-bit outputs `x`, `y` and set `a = (x >> 32) | 1`,
//! `b = y >> 32`.

use alloc::vec::Vec;

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

/// Prime modulus shared by every family: 2^32 + 15.
pub const PRIME: u64 = (1 << 32) + 15;

/// Number of functions used when none is requested explicitly.
pub const DEFAULT_FUNCTIONS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum HashError {
    #[error("a hash family needs at least 2 functions, got {0}")]
    TooFewFunctions(usize),
    #[error("hash function index {index} out of range for a family of {count}")]
    IndexOutOfRange { index: usize, count: usize },
}

/// Constants of a single `((a * k + b) mod p) mod m` function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HashParams {
    pub a: u32,
    pub b: u32,
}

impl HashParams {
    /// Maps `key` into `[0, m)`. `m` must be nonzero.
    #[inline]
    pub fn apply(&self, key: u32, m: usize) -> usize {
        debug_assert!(m >= 1);
        let mixed = (u64::from(self.a) * u64::from(key) + u64::from(self.b)) % PRIME;
        (mixed % m as u64) as usize
    }
}

/// `c` hash functions derived from one seed. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashFamily {
    params: Vec<HashParams>,
    seed: u64,
}

impl HashFamily {
    pub fn generate(seed: u64, count: usize) -> Result<Self, HashError> {
        if count < 2 {
            return Err(HashError::TooFewFunctions(count));
        }
        let mut rng = SplitMix64::seed_from_u64(seed);
        let params = (0..count)
            .map(|_| {
                let a = ((rng.next_u64() >> 32) as u32) | 1;
                let b = (rng.next_u64() >> 32) as u32;
                HashParams { a, b }
            })
            .collect();
        Ok(Self { params, seed })
    }

    /// Builds a family from explicit constants. Useful for constructing
    /// specific collision patterns; `a` is forced odd.
    pub fn from_params(params: &[HashParams]) -> Result<Self, HashError> {
        if params.len() < 2 {
            return Err(HashError::TooFewFunctions(params.len()));
        }
        let params = params
            .iter()
            .map(|p| HashParams { a: p.a | 1, b: p.b })
            .collect();
        Ok(Self { params, seed: 0 })
    }

    pub fn count(&self) -> usize {
        self.params.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> &[HashParams] {
        &self.params
    }

    /// Index of `key` in a table of `m` slots under function `i`.
    pub fn hash(&self, i: usize, key: u32, m: usize) -> Result<usize, HashError> {
        self.params
            .get(i)
            .map(|p| p.apply(key, m.max(1)))
            .ok_or(HashError::IndexOutOfRange {
                index: i,
                count: self.params.len(),
            })
    }

    /// Unchecked-index variant for the table hot paths, where `i < count()`
    /// holds by construction.
    #[inline]
    pub(crate) fn index(&self, i: usize, key: u32, m: usize) -> usize {
        self.params[i].apply(key, m)
    }
}
