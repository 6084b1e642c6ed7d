use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Problems with an on-disk `ACTS` or `SAE1` file.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported version {0}")]
    BadVersion(u32),
    #[error("truncated file: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("trailing data: expected {expected} bytes, found {found}")]
    TrailingBytes { expected: u64, found: u64 },
    #[error("invalid header: {0}")]
    Header(String),
    #[error("record width {found} does not match shard width {expected}")]
    MixedWidth { expected: usize, found: usize },
    #[error("non-finite value in record {record}")]
    NonFinite { record: u64 },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("training diverged at step {step}: {reason}")]
    Divergence { step: u64, reason: String },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("format error: {0}")]
    Format(#[from] FormatError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("channel range {start}..{end} invalid for width {width}")]
    Range {
        start: usize,
        end: usize,
        width: usize,
    },
    #[error("degenerate grid: every position has zero magnitude")]
    DegenerateGrid,
    #[error("decoder column {feature} has zero norm")]
    Singularity { feature: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("degenerate baseline for feature {feature}: std = {std}")]
    DegenerateBaseline { feature: usize, std: f64 },
}
