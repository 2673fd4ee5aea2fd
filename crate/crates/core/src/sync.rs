//! Rewriting streams onto a common reference timeline.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{estimate_offset, OffsetEstimate, SyncConfig};
use crate::event::{build_stream, Event, EventStream};

/// A stream moved onto another clock, with the number of events that fell
/// before that clock's zero and were discarded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftedStream {
    pub stream: EventStream,
    pub dropped: usize,
}

/// Adds `delta_t21` to every timestamp. Events that would land before zero
/// are dropped and counted; order is preserved.
pub fn apply_offset(stream: &EventStream, delta_t21: i64) -> ShiftedStream {
    let mut dropped = 0;
    let events: Vec<Event> = stream
        .events()
        .iter()
        .filter_map(|e| {
            let t = e.t as i64 + delta_t21;
            if t < 0 {
                dropped += 1;
                None
            } else {
                Some(Event { t: t as u64, ..*e })
            }
        })
        .collect();
    let stream = build_stream(events, stream.geometry(), stream.label())
        .expect("uniform shift keeps events sorted and in bounds");
    ShiftedStream { stream, dropped }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportEntry {
    pub label: String,
    pub delta_vs_reference: i64,
    /// `None` for streams whose estimation failed.
    pub min_dissimilarity: Option<f64>,
    pub accepted: bool,
    pub windows_consumed: usize,
    /// Events discarded because they fell before the reference clock's zero.
    pub dropped_events: usize,
    /// Estimator error for this stream, if any.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyncReport {
    pub reference_label: String,
    pub entries: Vec<ReportEntry>,
}

impl SyncReport {
    pub fn all_accepted(&self) -> bool {
        self.entries.iter().all(|e| e.accepted)
    }

    pub fn any_failed(&self) -> bool {
        self.entries.iter().any(|e| e.error.is_some())
    }
}

/// Output of [`synchronize`], in input order.
#[derive(Debug, Clone)]
pub struct Synchronized {
    pub streams: Vec<EventStream>,
    pub report: SyncReport,
    /// Per-stream estimate; `None` for the reference and for failures.
    pub estimates: Vec<Option<OffsetEstimate>>,
}

/// Estimates every non-reference stream's offset against the reference and
/// shifts the accepted ones onto the reference clock. Rejected or failed
/// streams come back unmodified and are flagged in the report.
pub fn synchronize(
    streams: &[EventStream],
    reference_index: usize,
    cfg: &SyncConfig,
) -> Result<Synchronized> {
    if streams.len() < 2 {
        return Err(Error::TooFewStreams(streams.len()));
    }
    if reference_index >= streams.len() {
        return Err(Error::InvalidReference {
            index: reference_index,
            len: streams.len(),
        });
    }
    cfg.validate()?;
    let reference = &streams[reference_index];

    let results: Vec<(EventStream, ReportEntry, Option<OffsetEstimate>)> = streams
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            if i == reference_index {
                let entry = ReportEntry {
                    label: s.label().to_owned(),
                    delta_vs_reference: 0,
                    min_dissimilarity: Some(0.0),
                    accepted: true,
                    windows_consumed: 0,
                    dropped_events: 0,
                    error: None,
                };
                return (s.clone(), entry, None);
            }
            match estimate_offset(reference, s, cfg) {
                Ok(est) => {
                    let (out, dropped) = if est.accepted {
                        let shifted = apply_offset(s, est.delta_t21);
                        (shifted.stream, shifted.dropped)
                    } else {
                        (s.clone(), 0)
                    };
                    let entry = ReportEntry {
                        label: s.label().to_owned(),
                        delta_vs_reference: est.delta_t21,
                        min_dissimilarity: Some(est.min_dissimilarity),
                        accepted: est.accepted,
                        windows_consumed: est.windows_consumed,
                        dropped_events: dropped,
                        error: None,
                    };
                    (out, entry, Some(est))
                }
                Err(e) => {
                    let entry = ReportEntry {
                        label: s.label().to_owned(),
                        delta_vs_reference: 0,
                        min_dissimilarity: None,
                        accepted: false,
                        windows_consumed: 0,
                        dropped_events: 0,
                        error: Some(e.to_string()),
                    };
                    (s.clone(), entry, None)
                }
            }
        })
        .collect();

    let mut out = Synchronized {
        streams: Vec::with_capacity(results.len()),
        report: SyncReport {
            reference_label: reference.label().to_owned(),
            entries: Vec::with_capacity(results.len()),
        },
        estimates: Vec::with_capacity(results.len()),
    };
    for (stream, entry, est) in results {
        out.streams.push(stream);
        out.report.entries.push(entry);
        out.estimates.push(est);
    }
    Ok(out)
}
