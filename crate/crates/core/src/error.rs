use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("event {index} has timestamp {t} us, earlier than its predecessor ({prev} us)")]
    OutOfOrderTimestamps { index: usize, t: u64, prev: u64 },

    #[error("event {index} at pixel ({x}, {y}) lies outside the {width}x{height} sensor")]
    OutOfBoundsPixel {
        index: usize,
        x: u32,
        y: u32,
        width: u32,
        height: u32,
    },

    #[error("sensor geometry must be at least 1x1, got {width}x{height}")]
    InvalidGeometry { width: u32, height: u32 },

    #[error("stream is empty")]
    EmptyStream,

    #[error("bin width must be positive")]
    InvalidBinWidth,

    #[error("window length {window_len} us is not a positive multiple of the bin width {tau} us")]
    WindowNotMultipleOfTau { window_len: u64, tau: u64 },

    #[error("distribution holds no events")]
    EmptyDistribution,

    #[error("percentile must lie strictly between 0 and 100, got {0}")]
    InvalidPercentile(f64),

    #[error("distributions use different bin widths ({0} us vs {1} us)")]
    MismatchedTau(u64, u64),

    #[error("shift of {delta} us does not align the two bin grids (tau = {tau} us)")]
    MisalignedShift { delta: i64, tau: u64 },

    #[error("shifted distributions do not overlap")]
    NoOverlap,

    #[error("overlap carries no events on at least one side")]
    EmptyOverlap,

    #[error("no candidate offset in [{a}, {b}] us had enough overlap")]
    NoValidCandidate { a: i64, b: i64 },

    #[error("stream `{label}` has no events left for window {window}")]
    StreamExhausted { label: String, window: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("synchronization needs at least two streams, got {0}")]
    TooFewStreams(usize),

    #[error("reference index {index} out of range for {len} streams")]
    InvalidReference { index: usize, len: usize },

    #[error("duration {duration} us is not a positive multiple of the bin width {tau} us")]
    InvalidDuration { duration: u64, tau: u64 },

    #[error("{path}: malformed header: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },

    #[error("{path}:{line}: malformed row: {reason}")]
    MalformedRow {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: invalid event data: {source}")]
    InvalidFile {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
