use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hashkeeper::bench::{self, BenchConfig, BenchError, SweepConfig, TableKind, Workload};
use hashkeeper::tracefile::{self, Meta};
use hashkeeper_core::trace::{self, Model};
use hashkeeper_core::workload;

const USAGE: u8 = 1;
const TABLE_FULL: u8 = 2;
const INCONSISTENT: u8 = 3;

/// Concurrent find-or-insert hash table benchmarks.
#[derive(Debug, Parser)]
#[command(name = "hashkeeper", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a random workload with a given duplication factor.
    Gen {
        #[arg(long = "len")]
        length: usize,
        /// Average number of occurrences of each value.
        #[arg(long)]
        dup: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Explore a model breadth first and write its find-or-insert trace.
    Explore {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time one table on a workload file.
    Bench {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = TableKind::Cuckoo)]
        table: TableKind,
        /// Words per stored vector (bucket table only).
        #[arg(long, default_value_t = 1)]
        width: usize,
        #[command(flatten)]
        common: Common,
        /// Append the report here instead of printing it.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Time both tables over a range of duplication factors.
    Sweep {
        #[arg(long = "len", value_delimiter = ',', default_value = "1000000")]
        lengths: Vec<usize>,
        #[arg(
            long = "dup",
            value_delimiter = ',',
            default_value = "1,2,5,10,50,100,250,450,500,666,700,1000"
        )]
        duplications: Vec<f64>,
        #[arg(
            long = "table",
            value_enum,
            value_delimiter = ',',
            default_value = "cuckoo,bucket"
        )]
        tables: Vec<TableKind>,
        /// Workload seed, shared by all tables.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Vector width used for the bucket table.
        #[arg(long, default_value_t = 1)]
        width: usize,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    /// Table capacity relative to the unique count.
    #[arg(long, default_value_t = hashkeeper_core::DEFAULT_SCALE)]
    scale: f64,
    #[arg(long, default_value_t = 4)]
    hash_functions: usize,
    #[arg(long, default_value_t = 0x5eed)]
    hash_seed: u64,
}

impl Common {
    fn config(&self, table: TableKind, width: usize) -> BenchConfig {
        BenchConfig {
            table,
            width,
            workers: self.workers,
            reps: self.reps,
            scale: self.scale,
            hash_functions: self.hash_functions,
            hash_seed: self.hash_seed,
        }
    }
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(e: impl std::fmt::Display) -> Self {
        Self {
            code: USAGE,
            message: e.to_string(),
        }
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        let code = match e {
            BenchError::Consistency { .. } => INCONSISTENT,
            _ => USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("hashkeeper: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Gen {
            length,
            dup,
            seed,
            out,
        } => {
            let codes = workload::gen_random(length, dup, seed).map_err(Failure::usage)?;
            let meta = Meta::describe(&codes, format!("random(d={dup}, seed={seed})"));
            tracefile::write(&out, &codes, &meta).map_err(Failure::usage)?;
            summarize(&out, &meta);
            Ok(())
        }
        Command::Explore { model, out } => {
            let text = std::fs::read_to_string(&model)
                .map_err(|e| Failure::usage(format!("{}: {e}", model.display())))?;
            let parsed = Model::parse(&text)
                .map_err(|e| Failure::usage(format!("{}: {e}", model.display())))?;
            let t = trace::explore(&parsed).map_err(Failure::usage)?;
            let meta = Meta::describe(t.codes(), format!("explore({})", model.display()));
            tracefile::write(&out, t.codes(), &meta).map_err(Failure::usage)?;
            summarize(&out, &meta);
            Ok(())
        }
        Command::Bench {
            input,
            table,
            width,
            common,
            csv,
        } => {
            let codes = tracefile::read(&input).map_err(Failure::usage)?;
            let workload = Workload::new(codes)?;
            let report = bench::run(&workload, &common.config(table, width))?;
            let reports = [report];
            match csv {
                Some(path) => append_csv(&path, &reports)?,
                None => bench::write_csv(io::stdout().lock(), &reports)?,
            }
            full_check(&reports)
        }
        Command::Sweep {
            lengths,
            duplications,
            tables,
            seed,
            width,
            common,
            out,
        } => {
            let config = SweepConfig {
                lengths,
                duplications,
                tables,
                seed,
                bench: common.config(TableKind::Bucket, width),
            };
            let reports = bench::sweep(&config)?;
            let file = File::create(&out)
                .map_err(|e| Failure::usage(format!("{}: {e}", out.display())))?;
            bench::write_csv(BufWriter::new(file), &reports)?;
            full_check(&reports)
        }
    }
}

fn summarize(out: &Path, meta: &Meta) {
    eprintln!(
        "{}: {} codes, {} unique, mean multiplicity {:.3}",
        out.display(),
        meta.length,
        meta.unique_count,
        meta.mean_multiplicity
    );
}

/// Appends rows to `path`, writing the header only into a new file.
fn append_csv(path: &Path, reports: &[bench::BenchReport]) -> Result<(), Failure> {
    let fresh = std::fs::metadata(path)
        .map(|m| m.len() == 0)
        .unwrap_or(true);
    let file = File::options()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let mut out = BufWriter::new(file);
    if fresh {
        bench::write_csv(&mut out, reports)?;
    } else {
        let mut w = csv::Writer::from_writer(&mut out);
        for r in reports {
            w.write_record(r.csv_record()).map_err(BenchError::from)?;
        }
        w.flush().map_err(BenchError::from)?;
    }
    out.flush().map_err(BenchError::from)?;
    Ok(())
}

fn full_check(reports: &[bench::BenchReport]) -> Result<(), Failure> {
    let full: Vec<String> = reports
        .iter()
        .filter(|r| r.table_full)
        .map(|r| format!("{} at duplication {:.2}", r.table, r.duplication))
        .collect();
    if full.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: TABLE_FULL,
            message: format!("table full: {}", full.join(", ")),
        })
    }
}
