//! Duplicate-safe concurrent cuckoo hashing over 32-bit keys.
//!
//! A key `k` is first placed at `h_0(k)`. When that slot is taken the
//! occupant is evicted and moved to the slot of its *next* function: if the
//! occupant sat at `h_j(k')`, it moves to `h_{(j+1) mod c}(k')`. The chain
//! continues until a vacant slot absorbs the carried key or the eviction
//! bound is reached, at which point the carried key goes to a small stash.
//! When the stash is full as well the chain is undone and the caller gets
//! [`Status::TableFull`]; the table is then expected to be [rebuilt].
//!
//! Concurrency:
//!
//! * Lookups are lock-free. A sequence counter is odd while an eviction chain
//!   is moving keys around; [`CuckooTable::contains`] retries a scan that
//!   overlapped a chain, so a key that is merely in flight is never reported
//!   missing.
//! * A first placement into a vacant `h_0(k)` slot is a single
//!   compare-and-swap. A failed swap whose witness equals `k` means another
//!   worker just inserted the same key, and the call reports `Found`.
//! * Eviction chains are serialized by one insertion lock and use atomic
//!   exchange on each slot.
//!
//! Slots never return to `EMPTY` once filled, so once any worker has stored
//! `k`, the compare-and-swap at `h_0(k)` fails for everybody else. Together
//! with the locked re-check this gives exactly-once insertion per distinct
//! key.
//!
//! [rebuilt]: CuckooTable::rebuild

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU32, AtomicU64, AtomicUsize, Ordering};

use crate::hashfamily::{HashError, HashFamily};
use crate::sync::{relax, Lock};
use crate::{ceil_scaled, Status, DEFAULT_SCALE};

/// Vacant slot marker. Keys must lie in `[0, 2^32 - 2]`.
pub const EMPTY: u32 = u32::MAX;

/// Stash capacity used when none is given.
pub const DEFAULT_STASH: usize = 101;

/// Seeds tried at one table size before a rebuild grows the table.
const REBUILD_SEEDS_PER_SIZE: u32 = 8;
/// Total rebuild attempts before giving up.
const REBUILD_ATTEMPTS: u32 = 32;
/// Validated-scan retries before a lookup falls back to the insertion lock.
const OPTIMISTIC_RETRIES: usize = 4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CuckooError {
    #[error("expected unique key count must be at least 1")]
    ZeroCapacity,
    #[error("stash must hold at least one key")]
    ZeroStash,
    #[error("eviction bound must be at least 1")]
    ZeroEvictionBound,
    #[error("table scale factor must be finite and above 1, got {0}")]
    InvalidScale(f64),
    #[error("key {EMPTY:#x} is reserved as the empty-slot marker")]
    SentinelKey,
    #[error("rebuild could not place every key after {attempts} attempts")]
    UnrecoverableFull { attempts: u32 },
    #[error(transparent)]
    Hash(#[from] HashError),
}

/// Result of a [`CuckooTable::find_or_insert`] call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InsertOutcome {
    pub status: Status,
    /// Displacements performed by this call; 0 unless it inserted.
    pub evictions: usize,
}

impl InsertOutcome {
    const FOUND: Self = Self {
        status: Status::Found,
        evictions: 0,
    };
}

/// A lookup together with the number of table words it read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lookup {
    pub found: bool,
    pub words_read: usize,
}

/// Construction knobs. [`Default`] gives the standard sizing: 1.25x slots,
/// a 101-entry stash and `7 * ceil(log2 m)` evictions per chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CuckooOptions {
    pub scale: f64,
    pub max_evictions: Option<usize>,
    pub stash_size: usize,
}

impl Default for CuckooOptions {
    fn default() -> Self {
        Self {
            scale: DEFAULT_SCALE,
            max_evictions: None,
            stash_size: DEFAULT_STASH,
        }
    }
}

/// `7 * ceil(log2 m)`, at least 1.
pub fn default_max_evictions(slots: usize) -> usize {
    let log2 = if slots <= 1 {
        0
    } else {
        (usize::BITS - (slots - 1).leading_zeros()) as usize
    };
    (7 * log2).max(1)
}

#[derive(Debug)]
pub struct CuckooTable {
    slots: Box<[AtomicU32]>,
    stash: Box<[AtomicU32]>,
    stash_len: AtomicUsize,
    family: HashFamily,
    max_evictions: usize,
    rebuild_count: u32,
    /// Odd while an eviction chain is in progress.
    seq: AtomicU64,
    insert_lock: Lock,
}

fn empty_words(n: usize) -> Box<[AtomicU32]> {
    (0..n).map(|_| AtomicU32::new(EMPTY)).collect()
}

impl CuckooTable {
    /// Sizes the table at `ceil(1.25 * expected_unique)` slots.
    pub fn new(
        expected_unique: usize,
        family: HashFamily,
        max_evictions: usize,
        stash_size: usize,
    ) -> Result<Self, CuckooError> {
        Self::with_options(
            expected_unique,
            family,
            CuckooOptions {
                max_evictions: Some(max_evictions),
                stash_size,
                ..CuckooOptions::default()
            },
        )
    }

    pub fn with_options(
        expected_unique: usize,
        family: HashFamily,
        options: CuckooOptions,
    ) -> Result<Self, CuckooError> {
        if expected_unique == 0 {
            return Err(CuckooError::ZeroCapacity);
        }
        if !(options.scale.is_finite() && options.scale > 1.0) {
            return Err(CuckooError::InvalidScale(options.scale));
        }
        let slots = ceil_scaled(expected_unique, options.scale);
        Self::with_slots(slots, family, options.max_evictions, options.stash_size)
    }

    /// Builds a table with exactly `slots` slots.
    pub fn with_slots(
        slots: usize,
        family: HashFamily,
        max_evictions: Option<usize>,
        stash_size: usize,
    ) -> Result<Self, CuckooError> {
        if slots == 0 {
            return Err(CuckooError::ZeroCapacity);
        }
        if stash_size == 0 {
            return Err(CuckooError::ZeroStash);
        }
        let max_evictions = max_evictions.unwrap_or_else(|| default_max_evictions(slots));
        if max_evictions == 0 {
            return Err(CuckooError::ZeroEvictionBound);
        }
        Ok(Self {
            slots: empty_words(slots),
            stash: empty_words(stash_size),
            stash_len: AtomicUsize::new(0),
            family,
            max_evictions,
            rebuild_count: 0,
            seq: AtomicU64::new(0),
            insert_lock: Lock::new(),
        })
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    pub fn stash_capacity(&self) -> usize {
        self.stash.len()
    }

    pub fn max_evictions(&self) -> usize {
        self.max_evictions
    }

    pub fn rebuild_count(&self) -> u32 {
        self.rebuild_count
    }

    pub fn family(&self) -> &HashFamily {
        &self.family
    }

    #[inline]
    fn slot_of(&self, i: usize, key: u32) -> usize {
        self.family.index(i, key, self.slots.len())
    }

    /// One unvalidated pass over the candidate slots and the stash.
    #[inline]
    fn scan(&self, key: u32) -> Lookup {
        let mut words_read = 0;
        for i in 0..self.family.count() {
            words_read += 1;
            if self.slots[self.slot_of(i, key)].load(Ordering::SeqCst) == key {
                return Lookup {
                    found: true,
                    words_read,
                };
            }
        }
        let stashed = self.stash_len.load(Ordering::SeqCst);
        for word in &self.stash[..stashed] {
            words_read += 1;
            if word.load(Ordering::SeqCst) == key {
                return Lookup {
                    found: true,
                    words_read,
                };
            }
        }
        Lookup {
            found: false,
            words_read,
        }
    }

    pub fn contains(&self, key: u32) -> bool {
        self.lookup(key).found
    }

    /// Membership test that also reports how many words the deciding scan
    /// read. A negative answer is only returned from a scan that did not
    /// overlap an eviction chain.
    pub fn lookup(&self, key: u32) -> Lookup {
        if key == EMPTY {
            return Lookup {
                found: false,
                words_read: 0,
            };
        }
        for _ in 0..OPTIMISTIC_RETRIES {
            let before = self.seq.load(Ordering::SeqCst);
            if before & 1 == 1 {
                relax();
                continue;
            }
            let result = self.scan(key);
            if result.found || self.seq.load(Ordering::SeqCst) == before {
                return result;
            }
        }
        let _guard = self.insert_lock.lock();
        self.scan(key)
    }

    pub fn find_or_insert(&self, key: u32) -> Result<InsertOutcome, CuckooError> {
        if key == EMPTY {
            return Err(CuckooError::SentinelKey);
        }
        if self.scan(key).found {
            return Ok(InsertOutcome::FOUND);
        }
        let home = self.slot_of(0, key);
        match self.slots[home].compare_exchange(EMPTY, key, Ordering::SeqCst, Ordering::SeqCst) {
            Ok(_) => {
                return Ok(InsertOutcome {
                    status: Status::Inserted,
                    evictions: 0,
                })
            }
            // Someone else is inserting the very same key.
            Err(current) if current == key => return Ok(InsertOutcome::FOUND),
            Err(_) => {}
        }

        let _guard = self.insert_lock.lock();
        // Chains cannot run concurrently with us, so this scan is exact.
        if self.scan(key).found {
            return Ok(InsertOutcome::FOUND);
        }
        self.seq.fetch_add(1, Ordering::SeqCst);
        let outcome = self.evict_chain(key, home);
        self.seq.fetch_add(1, Ordering::SeqCst);
        Ok(outcome)
    }

    /// Runs an eviction chain starting at `home`. Caller holds the insertion
    /// lock and has bumped the sequence counter.
    fn evict_chain(&self, key: u32, home: usize) -> InsertOutcome {
        let mut carry = key;
        let mut slot = home;
        let mut undo: Vec<(usize, u32)> = Vec::new();
        let mut evictions = 0;
        loop {
            let displaced = self.slots[slot].swap(carry, Ordering::SeqCst);
            if displaced == EMPTY {
                return InsertOutcome {
                    status: Status::Inserted,
                    evictions,
                };
            }
            if displaced == carry {
                // The carried key already sat here: a parallel insertion won.
                return InsertOutcome::FOUND;
            }
            undo.push((slot, displaced));
            evictions += 1;
            if evictions == self.max_evictions {
                let stashed = self.stash_len.load(Ordering::SeqCst);
                if stashed < self.stash.len() {
                    self.stash[stashed].store(displaced, Ordering::SeqCst);
                    self.stash_len.store(stashed + 1, Ordering::SeqCst);
                    return InsertOutcome {
                        status: Status::Inserted,
                        evictions,
                    };
                }
                for &(at, previous) in undo.iter().rev() {
                    self.slots[at].store(previous, Ordering::SeqCst);
                }
                return InsertOutcome {
                    status: Status::TableFull,
                    evictions,
                };
            }
            slot = self.next_slot(displaced, slot);
            carry = displaced;
        }
    }

    /// Slot for an evicted key: the function after the first one that maps
    /// it to `from`.
    fn next_slot(&self, key: u32, from: usize) -> usize {
        let c = self.family.count();
        let placed_by = (0..c)
            .find(|&j| self.slot_of(j, key) == from)
            .unwrap_or(c - 1);
        self.slot_of((placed_by + 1) % c, key)
    }

    /// Raw slot contents, `EMPTY` for vacant slots.
    pub fn slot_snapshot(&self) -> Vec<u32> {
        self.slots
            .iter()
            .map(|w| w.load(Ordering::SeqCst))
            .collect()
    }

    pub fn stash_snapshot(&self) -> Vec<u32> {
        let stashed = self.stash_len.load(Ordering::SeqCst);
        self.stash[..stashed]
            .iter()
            .map(|w| w.load(Ordering::SeqCst))
            .collect()
    }

    /// Every stored key, slots first then stash. Exact only at quiescence.
    pub fn keys(&self) -> Vec<u32> {
        let mut keys: Vec<u32> = self
            .slots
            .iter()
            .map(|w| w.load(Ordering::SeqCst))
            .filter(|&k| k != EMPTY)
            .collect();
        keys.extend(self.stash_snapshot());
        keys
    }

    pub fn len(&self) -> usize {
        self.slots
            .iter()
            .filter(|w| w.load(Ordering::SeqCst) != EMPTY)
            .count()
            + self.stash_len.load(Ordering::SeqCst)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks that every slotted key sits at one of its candidate slots.
    /// Returns the first offending `(slot, key)` pair.
    pub fn misplaced(&self) -> Option<(usize, u32)> {
        self.slot_snapshot()
            .into_iter()
            .enumerate()
            .filter(|&(_, k)| k != EMPTY)
            .find(|&(i, k)| (0..self.family.count()).all(|j| self.slot_of(j, k) != i))
    }

    /// Rebuilds with a fresh family drawn from `seed`, re-inserting every key.
    ///
    /// Taking `self` by value makes quiescence a compile-time guarantee. A
    /// failed placement retries with the next seed; after a few seeds the
    /// slot count grows by a quarter.
    pub fn rebuild(self, seed: u64) -> Result<Self, CuckooError> {
        let keys = self.keys();
        let count = self.family.count();
        let stash_size = self.stash.len();
        let mut slots = self.slots.len();
        'attempt: for attempt in 0..REBUILD_ATTEMPTS {
            if attempt > 0 && attempt % REBUILD_SEEDS_PER_SIZE == 0 {
                slots += slots.div_ceil(4);
            }
            let family = HashFamily::generate(seed.wrapping_add(u64::from(attempt)), count)?;
            let table = Self::with_slots(slots, family, None, stash_size)?;
            for &key in &keys {
                if table.find_or_insert(key)?.status == Status::TableFull {
                    continue 'attempt;
                }
            }
            return Ok(Self {
                rebuild_count: self.rebuild_count + 1,
                ..table
            });
        }
        Err(CuckooError::UnrecoverableFull {
            attempts: REBUILD_ATTEMPTS,
        })
    }
}
