//! Random find-or-insert sequences with a controlled duplication factor.
//!
//! For a sequence of `length` values and duplication factor `d`, values are
//! drawn uniformly with replacement from `[0, ceil(length / d))`, so each
//! value occurs about `d` times. The generator is SplitMix64 seeded with the
//! raw seed; each value is `((x >> 32) * range) >> 32` for the next 64-bit
//! output `x`.

use alloc::vec::Vec;

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum WorkloadError {
    #[error("workload length must be at least 1")]
    Empty,
    #[error("duplication factor must be at least 1, got {0}")]
    DuplicationTooSmall(f64),
    #[error("duplication factor {dup} exceeds the sequence length {length}")]
    DuplicationTooLarge { dup: f64, length: usize },
    #[error("value range {0} does not fit in 31 bits")]
    RangeTooLarge(u64),
}

/// Size of the value range for `length` draws at duplication `dup`.
pub fn value_range(length: usize, dup: f64) -> Result<u32, WorkloadError> {
    if length == 0 {
        return Err(WorkloadError::Empty);
    }
    if dup.is_nan() || dup < 1.0 {
        return Err(WorkloadError::DuplicationTooSmall(dup));
    }
    if dup > length as f64 {
        return Err(WorkloadError::DuplicationTooLarge { dup, length });
    }
    let range = crate::ceil_scaled(length, 1.0 / dup).max(1) as u64;
    if range > 1 << 31 {
        return Err(WorkloadError::RangeTooLarge(range));
    }
    Ok(range as u32)
}

/// Draws `length` values from `[0, ceil(length / dup))`.
pub fn gen_random(length: usize, dup: f64, seed: u64) -> Result<Vec<u32>, WorkloadError> {
    let range = u64::from(value_range(length, dup)?);
    let mut rng = SplitMix64::seed_from_u64(seed);
    Ok((0..length)
        .map(|_| (((rng.next_u64() >> 32) * range) >> 32) as u32)
        .collect())
}
