//! Bucketed hash table for fixed-width state vectors.
//!
//! The table is an array of 32-word buckets. Each bucket is cut into
//! `floor(32 / W)` aligned frames of `W` words; with `W = 3` that gives ten
//! frames and two trailing words that are never used. A vector hashes to one
//! bucket per hash function. Insertion walks the candidate buckets in
//! function order and claims the first free frame it meets:
//!
//! 1. compare-and-swap word 0 of the frame from `EMPTY` to `CLAIMED`,
//! 2. write words `1..W` of the vector,
//! 3. publish by storing the real word 0 with release ordering.
//!
//! Readers only trust a frame whose word 0 is neither sentinel, and they read
//! word 0 with acquire ordering, so a partially written frame is never
//! mistaken for a vector. A worker that loses a claim re-reads the frame,
//! waiting out a `CLAIMED` marker, and reports `Found` if the winner wrote
//! the same vector. Frames are never vacated or moved.
//!
//! Single-word vectors skip the `CLAIMED` step and swap word 0 directly.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU32, Ordering};

use crate::hashfamily::HashFamily;
use crate::sync::relax;
use crate::{ceil_scaled, Status, DEFAULT_SCALE};

/// Words per bucket.
pub const BUCKET_WORDS: usize = 32;
/// Word 0 of a vacant frame (every word of a fresh table holds this).
pub const EMPTY: u32 = u32::MAX;
/// Word 0 of a frame whose vector is still being written.
pub const CLAIMED: u32 = u32::MAX - 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BucketError {
    #[error("entry width must be between 1 and {BUCKET_WORDS} words, got {0}")]
    InvalidWidth(usize),
    #[error("expected unique vector count must be at least 1")]
    ZeroCapacity,
    #[error("table scale factor must be finite and above 1, got {0}")]
    InvalidScale(f64),
    #[error("vector has {got} words, table stores {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("word 0 of a vector may not be a reserved marker ({0:#x})")]
    SentinelWord(u32),
}

/// Result of a [`BucketTable::find_or_insert`] call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BucketOutcome {
    pub status: Status,
    /// Distinct buckets visited, at most the number of hash functions.
    pub buckets_probed: usize,
    /// Frame claims lost to other workers.
    pub claim_retries: usize,
}

/// Observed state of one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FrameState {
    Empty,
    Claimed,
    Occupied(Vec<u32>),
}

/// Folds a vector into the 32-bit value fed to the hash family.
///
/// A single word is used as is. Longer vectors are folded left to right:
/// `acc = ((acc rotl 5) ^ word) * 0x9E3779B1`, starting from word 0.
pub fn fingerprint(words: &[u32]) -> u32 {
    let (&first, rest) = words.split_first().expect("vectors have at least one word");
    rest.iter().fold(first, |acc, &w| {
        (acc.rotate_left(5) ^ w).wrapping_mul(0x9E37_79B1)
    })
}

#[repr(align(128))]
struct Bucket([AtomicU32; BUCKET_WORDS]);

impl Bucket {
    fn empty() -> Self {
        Self(core::array::from_fn(|_| AtomicU32::new(EMPTY)))
    }
}

pub struct BucketTable {
    buckets: Box<[Bucket]>,
    width: usize,
    frames_per_bucket: usize,
    family: HashFamily,
}

impl core::fmt::Debug for BucketTable {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("BucketTable")
            .field("buckets", &self.buckets.len())
            .field("width", &self.width)
            .field("frames_per_bucket", &self.frames_per_bucket)
            .field("family", &self.family)
            .finish()
    }
}

enum Probe {
    Found { probed: usize },
    Absent { first_open: usize },
}

impl BucketTable {
    pub fn new(
        expected_unique: usize,
        width: usize,
        family: HashFamily,
    ) -> Result<Self, BucketError> {
        Self::with_scale(expected_unique, width, DEFAULT_SCALE, family)
    }

    /// Sizes the table for `scale * expected_unique` frames, rounded up to
    /// whole buckets.
    pub fn with_scale(
        expected_unique: usize,
        width: usize,
        scale: f64,
        family: HashFamily,
    ) -> Result<Self, BucketError> {
        if !(1..=BUCKET_WORDS).contains(&width) {
            return Err(BucketError::InvalidWidth(width));
        }
        if expected_unique == 0 {
            return Err(BucketError::ZeroCapacity);
        }
        if !(scale.is_finite() && scale > 1.0) {
            return Err(BucketError::InvalidScale(scale));
        }
        let frames_per_bucket = BUCKET_WORDS / width;
        let buckets = ceil_scaled(expected_unique, scale).div_ceil(frames_per_bucket);
        Ok(Self::with_buckets(buckets, width, family))
    }

    /// Builds a table with exactly `buckets` buckets. Panics if `width` is
    /// outside `1..=32` or `buckets` is zero.
    pub fn with_buckets(buckets: usize, width: usize, family: HashFamily) -> Self {
        assert!((1..=BUCKET_WORDS).contains(&width) && buckets > 0);
        Self {
            buckets: (0..buckets).map(|_| Bucket::empty()).collect(),
            width,
            frames_per_bucket: BUCKET_WORDS / width,
            family,
        }
    }

    pub fn bucket_count(&self) -> usize {
        self.buckets.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn frames_per_bucket(&self) -> usize {
        self.frames_per_bucket
    }

    /// Total number of frames.
    pub fn capacity(&self) -> usize {
        self.buckets.len() * self.frames_per_bucket
    }

    pub fn family(&self) -> &HashFamily {
        &self.family
    }

    /// Bucket index of `words` under hash function `i`.
    pub fn bucket_of(&self, i: usize, words: &[u32]) -> usize {
        self.family.index(i, fingerprint(words), self.buckets.len())
    }

    fn check(&self, words: &[u32]) -> Result<(), BucketError> {
        if words.len() != self.width {
            return Err(BucketError::WidthMismatch {
                expected: self.width,
                got: words.len(),
            });
        }
        match words[0] {
            w @ (EMPTY | CLAIMED) => Err(BucketError::SentinelWord(w)),
            _ => Ok(()),
        }
    }

    /// Compares the tail of a published frame against `words`.
    #[inline]
    fn tail_matches(&self, frame: &[AtomicU32], words: &[u32]) -> bool {
        frame[1..]
            .iter()
            .zip(&words[1..])
            .all(|(slot, &w)| slot.load(Ordering::Relaxed) == w)
    }

    #[inline]
    fn frame<'a>(&self, bucket: &'a Bucket, frame: usize) -> &'a [AtomicU32] {
        let start = frame * self.width;
        &bucket.0[start..start + self.width]
    }

    /// Scans candidate buckets in function order. Stops at the first bucket
    /// that still has an unpublished frame: no vector can have spilled past
    /// a bucket that was never full.
    fn probe(&self, words: &[u32], fp: u32) -> Probe {
        let c = self.family.count();
        for j in 0..c {
            let bucket = &self.buckets[self.family.index(j, fp, self.buckets.len())];
            let mut open = false;
            // One contiguous pass over the bucket.
            for f in 0..self.frames_per_bucket {
                let frame = self.frame(bucket, f);
                match frame[0].load(Ordering::Acquire) {
                    EMPTY | CLAIMED => open = true,
                    w if w == words[0] && self.tail_matches(frame, words) => {
                        return Probe::Found { probed: j + 1 }
                    }
                    _ => {}
                }
            }
            if open {
                return Probe::Absent { first_open: j };
            }
        }
        Probe::Absent { first_open: c }
    }

    pub fn contains(&self, words: &[u32]) -> bool {
        self.check(words).is_ok()
            && matches!(self.probe(words, fingerprint(words)), Probe::Found { .. })
    }

    pub fn find_or_insert(&self, words: &[u32]) -> Result<BucketOutcome, BucketError> {
        self.check(words)?;
        let fp = fingerprint(words);
        let c = self.family.count();
        let start = match self.probe(words, fp) {
            Probe::Found { probed } => {
                return Ok(BucketOutcome {
                    status: Status::Found,
                    buckets_probed: probed,
                    claim_retries: 0,
                })
            }
            Probe::Absent { first_open } => first_open,
        };

        let mut claim_retries = 0;
        for j in start..c {
            let bucket = &self.buckets[self.family.index(j, fp, self.buckets.len())];
            for f in 0..self.frames_per_bucket {
                let frame = self.frame(bucket, f);
                loop {
                    let head = frame[0].load(Ordering::Acquire);
                    if head == EMPTY {
                        if self.claim(frame, words) {
                            return Ok(BucketOutcome {
                                status: Status::Inserted,
                                buckets_probed: j + 1,
                                claim_retries,
                            });
                        }
                        claim_retries += 1;
                    } else if head == CLAIMED {
                        relax();
                    } else if head == words[0] && self.tail_matches(frame, words) {
                        return Ok(BucketOutcome {
                            status: Status::Found,
                            buckets_probed: j + 1,
                            claim_retries,
                        });
                    } else {
                        break;
                    }
                }
            }
        }
        Ok(BucketOutcome {
            status: Status::TableFull,
            buckets_probed: c,
            claim_retries,
        })
    }

    /// Claims a vacant frame and writes `words` into it.
    fn claim(&self, frame: &[AtomicU32], words: &[u32]) -> bool {
        if self.width == 1 {
            return frame[0]
                .compare_exchange(EMPTY, words[0], Ordering::AcqRel, Ordering::Acquire)
                .is_ok();
        }
        if frame[0]
            .compare_exchange(EMPTY, CLAIMED, Ordering::Acquire, Ordering::Acquire)
            .is_err()
        {
            return false;
        }
        for (slot, &w) in frame[1..].iter().zip(&words[1..]) {
            slot.store(w, Ordering::Relaxed);
        }
        frame[0].store(words[0], Ordering::Release);
        true
    }

    /// Reads one frame the way a lookup would.
    pub fn frame_state(&self, bucket: usize, frame: usize) -> FrameState {
        let frame = self.frame(&self.buckets[bucket], frame);
        match frame[0].load(Ordering::Acquire) {
            EMPTY => FrameState::Empty,
            CLAIMED => FrameState::Claimed,
            _ => FrameState::Occupied(frame.iter().map(|w| w.load(Ordering::Relaxed)).collect()),
        }
    }

    /// Raw words of one bucket, including unused trailing words.
    pub fn bucket_words(&self, bucket: usize) -> [u32; BUCKET_WORDS] {
        core::array::from_fn(|i| self.buckets[bucket].0[i].load(Ordering::Acquire))
    }

    /// Published vectors as `(bucket, frame, words)`. Exact at quiescence.
    pub fn entries(&self) -> Vec<(usize, usize, Vec<u32>)> {
        let mut out = Vec::new();
        for b in 0..self.buckets.len() {
            for f in 0..self.frames_per_bucket {
                if let FrameState::Occupied(words) = self.frame_state(b, f) {
                    out.push((b, f, words));
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.buckets
            .iter()
            .map(|b| {
                (0..self.frames_per_bucket)
                    .filter(|&f| {
                        !matches!(b.0[f * self.width].load(Ordering::Acquire), EMPTY | CLAIMED)
                    })
                    .count()
            })
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
