//! Hardware-free temporal synchronization of event-camera streams.
//!
//! Each camera's events are binned into a normalized event-density
//! distribution; the start-time offset between two cameras is the shift that
//! makes their distributions most alike. [`estimate_offset`] recovers that
//! shift for one pair, [`synchronize`] applies it to a whole set of streams,
//! and [`synthgen`] produces streams with known offsets to test against.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod density;
pub mod error;
pub mod estimator;
pub mod event;
pub mod io;
pub mod sync;
pub mod synthgen;

pub use density::{density_distribution, percentile_timestamp, DensityDistribution};
pub use error::{Error, Result};
pub use estimator::{
    argmin_offset, dissimilarity, estimate_offset, exhaustive_offset, search_bounds, BoundsPolicy,
    Candidate, Dissimilarity, OffsetEstimate, SearchBounds, SyncConfig,
};
pub use event::{build_stream, Event, EventStream, Polarity, SensorGeometry};
pub use sync::{apply_offset, synchronize, ReportEntry, ShiftedStream, SyncReport, Synchronized};
