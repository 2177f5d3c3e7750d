//! Find-or-insert throughput measurement.
//!
//! A run counts the unique values of a workload, then for every repetition
//! builds a fresh table of `scale * unique` capacity, splits the workload
//! into one contiguous block per worker and times only the parallel
//! find-or-insert phase. After each repetition the stored set is checked
//! against the workload.

use std::collections::HashSet;
use std::fmt;
use std::io;
use std::sync::Barrier;
use std::thread;
use std::time::Instant;

use hashkeeper_core::bucket::{self, BucketError, BUCKET_WORDS};
use hashkeeper_core::cuckoo::{CuckooError, CuckooOptions};
use hashkeeper_core::hashfamily::HashError;
use hashkeeper_core::workload::{self, WorkloadError};
use hashkeeper_core::{BucketTable, CuckooTable, HashFamily, Status, DEFAULT_SCALE};

/// Default duplication axis, dense around 450-700.
pub const DEFAULT_DUPLICATIONS: [f64; 12] = [
    1.0, 2.0, 5.0, 10.0, 50.0, 100.0, 250.0, 450.0, 500.0, 666.0, 700.0, 1000.0,
];

pub const CSV_HEADER: [&str; 14] = [
    "table",
    "length",
    "unique",
    "duplication",
    "workers",
    "reps",
    "mean_ms",
    "min_ms",
    "max_ms",
    "throughput_mops",
    "inserted",
    "found",
    "load_factor",
    "table_full",
];

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("workload is empty")]
    EmptyWorkload,
    #[error("workload value {value:#x} at index {index} is reserved as a table sentinel")]
    ReservedValue { index: usize, value: u32 },
    #[error("{0} must be at least 1")]
    Zero(&'static str),
    #[error("scale must be a finite number above 1, got {0}")]
    Scale(f64),
    #[error("the cuckoo table stores single words; width {0} needs the bucket table")]
    CuckooWidth(usize),
    #[error("width must be between 1 and {BUCKET_WORDS}, got {0}")]
    Width(usize),
    #[error("nothing to sweep: {0} list is empty")]
    EmptyAxis(&'static str),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Hash(#[from] HashError),
    #[error(transparent)]
    Cuckoo(#[from] CuckooError),
    #[error(transparent)]
    Bucket(#[from] BucketError),
    #[error("writing CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("writing CSV: {0}")]
    Io(#[from] io::Error),
    /// The table's final contents contradict the workload.
    #[error("consistency check failed ({table}, repetition {rep}): {detail}")]
    Consistency {
        table: TableKind,
        rep: usize,
        detail: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, clap::ValueEnum)]
pub enum TableKind {
    Cuckoo,
    Bucket,
}

impl fmt::Display for TableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TableKind::Cuckoo => "cuckoo",
            TableKind::Bucket => "bucket",
        })
    }
}

/// A sequence of values to push through a table, sentinel-free.
#[derive(Debug, Clone)]
pub struct Workload {
    codes: Vec<u32>,
    unique: usize,
}

impl Workload {
    pub fn new(codes: Vec<u32>) -> Result<Self, BenchError> {
        if codes.is_empty() {
            return Err(BenchError::EmptyWorkload);
        }
        if let Some(index) = codes.iter().position(|&c| c >= bucket::CLAIMED) {
            return Err(BenchError::ReservedValue {
                index,
                value: codes[index],
            });
        }
        let unique = codes.iter().collect::<HashSet<_>>().len();
        Ok(Self { codes, unique })
    }

    pub fn random(length: usize, dup: f64, seed: u64) -> Result<Self, BenchError> {
        Self::new(workload::gen_random(length, dup, seed)?)
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn unique(&self) -> usize {
        self.unique
    }

    /// Empirical mean multiplicity.
    pub fn duplication(&self) -> f64 {
        self.codes.len() as f64 / self.unique as f64
    }
}

/// A concurrent set of codes as seen by the harness.
pub trait SetTable: Sync {
    fn find_or_insert(&self, code: u32) -> Status;
    /// Stored codes; only meaningful once workers have joined.
    fn stored(&self) -> Vec<u32>;
    fn capacity(&self) -> usize;
}

impl SetTable for CuckooTable {
    fn find_or_insert(&self, code: u32) -> Status {
        CuckooTable::find_or_insert(self, code)
            .expect("workload codes avoid the sentinel")
            .status
    }

    fn stored(&self) -> Vec<u32> {
        self.keys()
    }

    fn capacity(&self) -> usize {
        self.slot_count() + self.stash_capacity()
    }
}

/// A bucket table fed with `width`-word vectors derived from each code.
#[derive(Debug)]
pub struct VectorTable {
    table: BucketTable,
}

impl VectorTable {
    pub fn new(table: BucketTable) -> Self {
        Self { table }
    }

    pub fn inner(&self) -> &BucketTable {
        &self.table
    }
}

/// Spreads `code` over `out`; word 0 is the code itself.
pub fn expand(code: u32, out: &mut [u32]) {
    out[0] = code;
    for (i, w) in out.iter_mut().enumerate().skip(1) {
        *w = code.rotate_left(7 * i as u32) ^ (i as u32).wrapping_mul(0x9E37_79B9);
    }
}

impl SetTable for VectorTable {
    fn find_or_insert(&self, code: u32) -> Status {
        let width = self.table.width();
        let mut words = [0u32; BUCKET_WORDS];
        expand(code, &mut words[..width]);
        self.table
            .find_or_insert(&words[..width])
            .expect("vectors have the table's width and a sentinel-free first word")
            .status
    }

    fn stored(&self) -> Vec<u32> {
        self.table
            .entries()
            .into_iter()
            .map(|(_, _, w)| w[0])
            .collect()
    }

    fn capacity(&self) -> usize {
        self.table.capacity()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub table: TableKind,
    /// Words per stored vector; bucket table only.
    pub width: usize,
    pub workers: usize,
    pub reps: usize,
    pub scale: f64,
    pub hash_functions: usize,
    pub hash_seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            table: TableKind::Cuckoo,
            width: 1,
            workers: 1,
            reps: 10,
            scale: DEFAULT_SCALE,
            hash_functions: hashkeeper_core::hashfamily::DEFAULT_FUNCTIONS,
            hash_seed: 0x5eed,
        }
    }
}

impl BenchConfig {
    fn validate(&self) -> Result<(), BenchError> {
        if self.workers == 0 {
            return Err(BenchError::Zero("workers"));
        }
        if self.reps == 0 {
            return Err(BenchError::Zero("reps"));
        }
        if !(self.scale.is_finite() && self.scale > 1.0) {
            return Err(BenchError::Scale(self.scale));
        }
        if !(1..=BUCKET_WORDS).contains(&self.width) {
            return Err(BenchError::Width(self.width));
        }
        if self.table == TableKind::Cuckoo && self.width != 1 {
            return Err(BenchError::CuckooWidth(self.width));
        }
        Ok(())
    }
}

/// Either table behind one interface.
#[derive(Debug)]
pub enum AnyTable {
    Cuckoo(CuckooTable),
    Bucket(VectorTable),
}

impl SetTable for AnyTable {
    fn find_or_insert(&self, code: u32) -> Status {
        match self {
            AnyTable::Cuckoo(t) => SetTable::find_or_insert(t, code),
            AnyTable::Bucket(t) => t.find_or_insert(code),
        }
    }

    fn stored(&self) -> Vec<u32> {
        match self {
            AnyTable::Cuckoo(t) => t.stored(),
            AnyTable::Bucket(t) => t.stored(),
        }
    }

    fn capacity(&self) -> usize {
        match self {
            AnyTable::Cuckoo(t) => t.capacity(),
            AnyTable::Bucket(t) => t.capacity(),
        }
    }
}

/// Builds an empty table sized for `unique` values.
pub fn build_table(config: &BenchConfig, unique: usize) -> Result<AnyTable, BenchError> {
    let family = HashFamily::generate(config.hash_seed, config.hash_functions)?;
    Ok(match config.table {
        TableKind::Cuckoo => AnyTable::Cuckoo(CuckooTable::with_options(
            unique,
            family,
            CuckooOptions {
                scale: config.scale,
                ..CuckooOptions::default()
            },
        )?),
        TableKind::Bucket => AnyTable::Bucket(VectorTable::new(BucketTable::with_scale(
            unique,
            config.width,
            config.scale,
            family,
        )?)),
    })
}

/// Per-status counts of one parallel phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub inserted: usize,
    pub found: usize,
    /// Calls that reported a full table.
    pub rejected: usize,
}

impl Counts {
    fn add(self, o: Counts) -> Counts {
        Counts {
            inserted: self.inserted + o.inserted,
            found: self.found + o.found,
            rejected: self.rejected + o.rejected,
        }
    }
}

/// Runs the whole sequence through `table` with one contiguous block per
/// worker and returns the counts and the wall time of the parallel phase,
/// from the first worker starting to the last one finishing. Thread start-up
/// and joining stay outside that interval.
pub fn fill<T: SetTable + ?Sized>(table: &T, codes: &[u32], workers: usize) -> (Counts, f64) {
    let workers = workers.max(1);
    let block = codes.len().div_ceil(workers).max(1);
    let start = Barrier::new(workers);
    thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let lo = (w * block).min(codes.len());
                let hi = ((w + 1) * block).min(codes.len());
                let part = &codes[lo..hi];
                let start = &start;
                s.spawn(move || {
                    let mut counts = Counts::default();
                    start.wait();
                    let t0 = Instant::now();
                    for &c in part {
                        match table.find_or_insert(c) {
                            Status::Inserted => counts.inserted += 1,
                            Status::Found => counts.found += 1,
                            Status::TableFull => counts.rejected += 1,
                        }
                    }
                    (counts, t0, Instant::now())
                })
            })
            .collect();
        let mut counts = Counts::default();
        let mut first: Option<Instant> = None;
        let mut last: Option<Instant> = None;
        for h in handles {
            let (c, t0, t1) = h.join().expect("worker panicked");
            counts = counts.add(c);
            first = Some(first.map_or(t0, |f| f.min(t0)));
            last = Some(last.map_or(t1, |l| l.max(t1)));
        }
        let ms = match (first, last) {
            (Some(a), Some(b)) => b.duration_since(a).as_secs_f64() * 1e3,
            _ => 0.0,
        };
        (counts, ms)
    })
}

/// Raw repetitions, before any consistency check.
#[derive(Debug, Clone)]
pub struct Measurement {
    pub rep_ms: Vec<f64>,
    pub counts: Vec<Counts>,
}

/// Times `reps` repetitions, each on a table returned by `build`.
pub fn measure<T, F>(codes: &[u32], workers: usize, reps: usize, mut build: F) -> Measurement
where
    T: SetTable,
    F: FnMut() -> T,
{
    let mut m = Measurement {
        rep_ms: Vec::with_capacity(reps),
        counts: Vec::with_capacity(reps),
    };
    for _ in 0..reps {
        let table = build();
        let (counts, ms) = fill(&table, codes, workers);
        m.rep_ms.push(ms);
        m.counts.push(counts);
    }
    m
}

/// Checks a quiescent table against the workload it was filled with.
/// Returns whether the table reported itself full.
pub fn verify<T: SetTable + ?Sized>(
    table: &T,
    workload: &Workload,
    counts: Counts,
) -> Result<bool, String> {
    let stored = table.stored();
    let set: HashSet<u32> = stored.iter().copied().collect();
    if set.len() != stored.len() {
        return Err(format!("{} values stored twice", stored.len() - set.len()));
    }
    if counts.inserted != stored.len() {
        return Err(format!(
            "{} insertions reported, {} values stored",
            counts.inserted,
            stored.len()
        ));
    }
    if counts.inserted + counts.found + counts.rejected != workload.len() {
        return Err("outcome counts do not add up to the workload length".into());
    }
    let reference: HashSet<u32> = workload.codes().iter().copied().collect();
    if let Some(v) = set.iter().find(|v| !reference.contains(v)) {
        return Err(format!("stored value {v} is not in the workload"));
    }
    let full = counts.rejected > 0;
    if !full && set.len() != reference.len() {
        return Err(format!(
            "{} of {} unique values missing without a full table",
            reference.len() - set.len(),
            reference.len()
        ));
    }
    Ok(full)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub table: TableKind,
    pub length: usize,
    pub unique: usize,
    pub duplication: f64,
    pub workers: usize,
    pub reps: usize,
    pub mean_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
    pub throughput_mops: f64,
    /// Counts of the first repetition that hit a full table, else of the
    /// last repetition (all repetitions agree then).
    pub inserted: usize,
    pub found: usize,
    pub load_factor: f64,
    pub table_full: bool,
    pub rep_ms: Vec<f64>,
    pub tables_built: usize,
}

impl BenchReport {
    pub fn csv_record(&self) -> [String; 14] {
        [
            self.table.to_string(),
            self.length.to_string(),
            self.unique.to_string(),
            format!("{:.4}", self.duplication),
            self.workers.to_string(),
            self.reps.to_string(),
            format!("{:.6}", self.mean_ms),
            format!("{:.6}", self.min_ms),
            format!("{:.6}", self.max_ms),
            format!("{:.4}", self.throughput_mops),
            self.inserted.to_string(),
            self.found.to_string(),
            format!("{:.6}", self.load_factor),
            self.table_full.to_string(),
        ]
    }
}

/// Measures `workload` on the configured table.
pub fn run(workload: &Workload, config: &BenchConfig) -> Result<BenchReport, BenchError> {
    config.validate()?;
    let unique = workload.unique();
    let mut rep_ms = Vec::with_capacity(config.reps);
    let mut tables_built = 0;
    let mut reported: Option<(Counts, usize, usize)> = None;
    let mut table_full = false;
    for rep in 0..config.reps {
        let table = build_table(config, unique)?;
        tables_built += 1;
        let (counts, ms) = fill(&table, workload.codes(), config.workers);
        rep_ms.push(ms);
        let full = verify(&table, workload, counts).map_err(|detail| BenchError::Consistency {
            table: config.table,
            rep,
            detail,
        })?;
        if !table_full {
            reported = Some((counts, counts.inserted, table.capacity()));
        }
        table_full |= full;
    }
    let (counts, stored, capacity) = reported.expect("at least one repetition");
    let mean_ms = rep_ms.iter().sum::<f64>() / rep_ms.len() as f64;
    let min_ms = rep_ms.iter().copied().fold(f64::INFINITY, f64::min);
    let max_ms = rep_ms.iter().copied().fold(0.0, f64::max);
    Ok(BenchReport {
        table: config.table,
        length: workload.len(),
        unique,
        duplication: workload.duplication(),
        workers: config.workers,
        reps: config.reps,
        mean_ms,
        min_ms,
        max_ms,
        throughput_mops: workload.len() as f64 / (mean_ms * 1e3),
        inserted: counts.inserted,
        found: counts.found,
        load_factor: stored as f64 / capacity as f64,
        table_full,
        rep_ms,
        tables_built,
    })
}

/// Parameters of a duplication sweep over random workloads.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub lengths: Vec<usize>,
    pub duplications: Vec<f64>,
    pub tables: Vec<TableKind>,
    /// Workload seed; every table sees the same sequences.
    pub seed: u64,
    pub bench: BenchConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            lengths: vec![1_000_000],
            duplications: DEFAULT_DUPLICATIONS.to_vec(),
            tables: vec![TableKind::Cuckoo, TableKind::Bucket],
            seed: 1,
            bench: BenchConfig::default(),
        }
    }
}

/// One report per (table, duplication, length), in that order, with both
/// axes ascending.
pub fn sweep(config: &SweepConfig) -> Result<Vec<BenchReport>, BenchError> {
    if config.lengths.is_empty() {
        return Err(BenchError::EmptyAxis("length"));
    }
    if config.duplications.is_empty() {
        return Err(BenchError::EmptyAxis("duplication"));
    }
    if config.tables.is_empty() {
        return Err(BenchError::EmptyAxis("table"));
    }
    let mut tables = config.tables.clone();
    tables.sort();
    tables.dedup();
    let mut dups = config.duplications.clone();
    dups.sort_by(f64::total_cmp);
    dups.dedup();
    let mut lengths = config.lengths.clone();
    lengths.sort();
    lengths.dedup();

    let mut workloads = Vec::new();
    for &d in &dups {
        for &len in &lengths {
            workloads.push(Workload::random(len, d, config.seed)?);
        }
    }
    let mut reports = Vec::with_capacity(tables.len() * workloads.len());
    for &table in &tables {
        let bench = BenchConfig {
            table,
            width: if table == TableKind::Cuckoo {
                1
            } else {
                config.bench.width
            },
            ..config.bench.clone()
        };
        for w in &workloads {
            reports.push(run(w, &bench)?);
        }
    }
    Ok(reports)
}

/// Writes a header and one row per report.
pub fn write_csv<W: io::Write>(out: W, reports: &[BenchReport]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in reports {
        w.write_record(r.csv_record())?;
    }
    w.flush()?;
    Ok(())
}
