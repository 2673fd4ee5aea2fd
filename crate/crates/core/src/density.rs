//! Normalized event density over fixed-width time bins.
//!
//! Bin `k` covers `[origin + k*tau, origin + (k+1)*tau)` and holds the
//! fraction of the window's events that fall inside it. Both polarities
//! count. The raw integer counts are kept alongside the masses so that
//! comparisons between distributions can renormalize without rounding drift.

use crate::error::{Error, Result};
use crate::event::EventStream;

/// Default bin width: one millisecond.
pub const DEFAULT_TAU_US: u64 = 1_000;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityDistribution {
    counts: Vec<u64>,
    bins: Vec<f64>,
    tau: u64,
    origin: i64,
    total_events: u64,
}

impl DensityDistribution {
    /// Builds a distribution from per-bin event counts.
    pub fn from_counts(counts: Vec<u64>, tau: u64, origin: i64) -> Result<Self> {
        if tau == 0 {
            return Err(Error::InvalidBinWidth);
        }
        let total_events: u64 = counts.iter().sum();
        let bins = if total_events == 0 {
            vec![0.0; counts.len()]
        } else {
            let n = total_events as f64;
            counts.iter().map(|&c| c as f64 / n).collect()
        };
        Ok(Self {
            counts,
            bins,
            tau,
            origin,
            total_events,
        })
    }

    /// Normalized masses, one per bin.
    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn tau(&self) -> u64 {
        self.tau
    }

    /// Left edge of bin 0, in microseconds.
    pub fn origin(&self) -> i64 {
        self.origin
    }

    /// Number of events used for normalization.
    pub fn total_events(&self) -> u64 {
        self.total_events
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total_events == 0
    }

    pub fn bin_start(&self, k: usize) -> i64 {
        self.origin + k as i64 * self.tau as i64
    }

    /// Right edge of the last bin (exclusive).
    pub fn end(&self) -> i64 {
        self.bin_start(self.len())
    }

    /// Merges every `factor` adjacent bins into one. A trailing partial
    /// group is merged into a final, shorter-covering bin.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidBinWidth);
        }
        let counts = self
            .counts
            .chunks(factor)
            .map(|c| c.iter().sum())
            .collect();
        Self::from_counts(counts, self.tau * factor as u64, self.origin)
    }

    /// Timestamp of the left edge of the first bin whose cumulative mass
    /// reaches `p` percent.
    pub fn percentile_timestamp(&self, p: f64) -> Result<i64> {
        if !(p > 0.0 && p < 100.0) {
            return Err(Error::InvalidPercentile(p));
        }
        if self.total_events == 0 {
            return Err(Error::EmptyDistribution);
        }
        // Compare in integer-count space: cum / N >= p / 100.
        let target = p * self.total_events as f64;
        let mut cum = 0u64;
        for (k, &c) in self.counts.iter().enumerate() {
            cum += c;
            if cum as f64 * 100.0 >= target {
                return Ok(self.bin_start(k));
            }
        }
        unreachable!("cumulative mass reaches 100% at the last bin")
    }
}

/// Bins the events of `stream` inside `[window_start, window_start + window_len)`.
///
/// Normalization uses only the in-window events. An empty window yields
/// all-zero bins with `total_events == 0`.
pub fn density_distribution(
    stream: &EventStream,
    window_start: u64,
    window_len: u64,
    tau: u64,
) -> Result<DensityDistribution> {
    if tau == 0 {
        return Err(Error::InvalidBinWidth);
    }
    if window_len < tau || !window_len.is_multiple_of(tau) {
        return Err(Error::WindowNotMultipleOfTau { window_len, tau });
    }
    let nbins = (window_len / tau) as usize;
    let window_end = window_start.saturating_add(window_len);
    let events = stream.events();
    let lo = stream.lower_bound(window_start);
    let hi = stream.lower_bound(window_end);

    let mut counts = vec![0u64; nbins];
    for e in &events[lo..hi] {
        counts[((e.t - window_start) / tau) as usize] += 1;
    }
    DensityDistribution::from_counts(counts, tau, window_start as i64)
}

/// Free-function form of [`DensityDistribution::percentile_timestamp`].
pub fn percentile_timestamp(dist: &DensityDistribution, p: f64) -> Result<i64> {
    dist.percentile_timestamp(p)
}
