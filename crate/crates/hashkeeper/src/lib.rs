//! Benchmark harness, trace files and command-line front end for the
//! `hashkeeper-core` tables.
//!
//! * [`bench`]: workloads, timed find-or-insert runs, duplication sweeps and
//!   their CSV form.
//! * [`tracefile`]: the binary trace format and its text sidecar.
#![warn(missing_debug_implementations, rust_2018_idioms)]

pub mod bench;
pub mod tracefile;

pub use bench::{BenchConfig, BenchError, BenchReport, SweepConfig, TableKind, Workload};
