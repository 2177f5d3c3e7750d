//! Binary trace files and their text sidecars.
//!
//! A trace file is the 8-byte magic `HKTRACE1`, the number of codes as a
//! little-endian `u64`, then the codes as little-endian `u32`s. Next to it,
//! `<file>.meta` holds `key = value` lines describing the sequence:
//!
//! ```text
//! length = 1000000
//! unique_count = 632121
//! mean_multiplicity = 1.581974
//! source = random(d=1, seed=7)
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

pub const MAGIC: &[u8; 8] = b"HKTRACE1";

#[derive(Debug, thiserror::Error)]
pub enum TraceFileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{0}: not a trace file (bad magic)")]
    BadMagic(PathBuf),
    #[error("{path}: header announces {expected} codes, file holds {actual}")]
    Length {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },
    #[error("{path}: line {line}: expected `key = value`")]
    Meta { path: PathBuf, line: usize },
}

/// Summary written next to a trace file.
#[derive(Debug, Clone, PartialEq)]
pub struct Meta {
    pub length: usize,
    pub unique_count: usize,
    pub mean_multiplicity: f64,
    pub source: String,
}

impl Meta {
    pub fn describe(codes: &[u32], source: impl Into<String>) -> Self {
        let unique_count = codes.iter().collect::<std::collections::HashSet<_>>().len();
        let mean_multiplicity = if unique_count == 0 {
            0.0
        } else {
            codes.len() as f64 / unique_count as f64
        };
        Self {
            length: codes.len(),
            unique_count,
            mean_multiplicity,
            source: source.into(),
        }
    }

    fn render(&self) -> String {
        format!(
            "length = {}\nunique_count = {}\nmean_multiplicity = {:.6}\nsource = {}\n",
            self.length, self.unique_count, self.mean_multiplicity, self.source
        )
    }
}

/// Path of the sidecar belonging to `trace`.
pub fn meta_path(trace: &Path) -> PathBuf {
    let mut name = trace.as_os_str().to_owned();
    name.push(".meta");
    PathBuf::from(name)
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> TraceFileError + '_ {
    move |source| TraceFileError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `codes` to `path` and the sidecar to `path.meta`.
pub fn write(path: &Path, codes: &[u32], meta: &Meta) -> Result<(), TraceFileError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    let mut body = || -> io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&(codes.len() as u64).to_le_bytes())?;
        for c in codes {
            out.write_all(&c.to_le_bytes())?;
        }
        out.flush()
    };
    body().map_err(io_err(path))?;
    let meta_file = meta_path(path);
    std::fs::write(&meta_file, meta.render()).map_err(io_err(&meta_file))
}

/// Reads the codes of a trace file; the sidecar is not needed.
pub fn read(path: &Path) -> Result<Vec<u32>, TraceFileError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut input = BufReader::new(file);
    let mut header = [0u8; 16];
    input.read_exact(&mut header).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            TraceFileError::BadMagic(path.to_path_buf())
        } else {
            io_err(path)(e)
        }
    })?;
    if &header[..8] != MAGIC {
        return Err(TraceFileError::BadMagic(path.to_path_buf()));
    }
    let expected = u64::from_le_bytes(header[8..].try_into().expect("8 bytes"));
    let mut body = Vec::new();
    input.read_to_end(&mut body).map_err(io_err(path))?;
    let actual = (body.len() / 4) as u64;
    if body.len() % 4 != 0 || actual != expected {
        return Err(TraceFileError::Length {
            path: path.to_path_buf(),
            expected,
            actual,
        });
    }
    Ok(body
        .chunks_exact(4)
        .map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")))
        .collect())
}

/// Reads a sidecar into its raw key/value pairs.
pub fn read_meta(path: &Path) -> Result<BTreeMap<String, String>, TraceFileError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| TraceFileError::Meta {
            path: path.to_path_buf(),
            line: i + 1,
        })?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}
