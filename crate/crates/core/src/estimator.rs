//! Start-time offset estimation by aligning two event-density distributions.
//!
//! Convention: `delta_t21` maps camera 2's clock onto camera 1's clock,
//! `t1 = t2 + delta_t21`. Equivalently it is camera 2's start time minus
//! camera 1's start time in world time, so a positive value means camera 2
//! started later. When comparing, camera 2's density is shifted right by
//! `delta_t21` and laid over camera 1's.
//!
//! The score of a candidate shift is computed over the overlapping bins
//! only. Each side is renormalized to unit mass on that overlap, so a
//! window that covers a different stretch of world time on each camera does
//! not leave a constant scale mismatch behind. The score is the sum of squared
//! per-bin differences of those renormalized masses. For two windows that
//! differ by a relative error e per bin, that sum is about e^2 / overlap, so
//! short overlaps, where chance agreement is cheap, need to match more
//! closely before they clear the acceptance threshold.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{density_distribution, DensityDistribution, DEFAULT_TAU_US};
use crate::error::{Error, Result};
use crate::event::EventStream;

/// How the candidate range for the offset search is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundsPolicy {
    /// Range derived from the distance between the two distributions'
    /// percentile timestamps.
    Percentile,
    /// Every shift that leaves at least `min_overlap_bins` of overlap.
    Overlap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncConfig {
    /// Bin width in microseconds.
    pub tau_us: u64,
    /// Analysis window length in microseconds.
    pub window_us: u64,
    /// A window's estimate is accepted once its score drops below this.
    pub epsilon: f64,
    /// Percentile used for the search bounds, in (0, 100).
    pub percentile: f64,
    pub max_windows: usize,
    /// Candidates whose overlap is shorter than this many bins are skipped.
    pub min_overlap_bins: usize,
    /// Half-width of the search range when both percentiles coincide.
    pub bound_fallback_halfwidth_us: i64,
    pub bounds_policy: BoundsPolicy,
}

impl Default for SyncConfig {
    fn default() -> Self {
        Self {
            tau_us: DEFAULT_TAU_US,
            window_us: 10_000_000,
            epsilon: 1e-4,
            percentile: 50.0,
            max_windows: 6,
            min_overlap_bins: 1000,
            bound_fallback_halfwidth_us: 500_000,
            bounds_policy: BoundsPolicy::Overlap,
        }
    }
}

impl SyncConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.tau_us == 0 {
            return Err(Error::InvalidBinWidth);
        }
        if self.window_us < self.tau_us || !self.window_us.is_multiple_of(self.tau_us) {
            return Err(Error::WindowNotMultipleOfTau {
                window_len: self.window_us,
                tau: self.tau_us,
            });
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return bad(format!("epsilon must be non-negative, got {}", self.epsilon));
        }
        if !(self.percentile > 0.0 && self.percentile < 100.0) {
            return Err(Error::InvalidPercentile(self.percentile));
        }
        if self.max_windows == 0 {
            return bad("max_windows must be at least 1".into());
        }
        if self.min_overlap_bins == 0 {
            return bad("min_overlap_bins must be at least 1".into());
        }
        if self.bound_fallback_halfwidth_us < 0 {
            return bad("bound fallback half-width must be non-negative".into());
        }
        Ok(())
    }

    pub fn window_bins(&self) -> usize {
        (self.window_us / self.tau_us) as usize
    }
}

/// Inclusive range `[a, b]` of candidate offsets, in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBounds {
    pub a: i64,
    pub b: i64,
}

impl SearchBounds {
    pub fn new(a: i64, b: i64) -> Result<Self> {
        if a > b {
            return Err(Error::InvalidConfig(format!(
                "search bounds reversed: [{a}, {b}]"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn contains(&self, delta: i64) -> bool {
        self.a <= delta && delta <= self.b
    }

    /// Same center, `factor` times the width.
    pub fn widened(&self, factor: i64) -> Self {
        let half = (self.b - self.a) / 2;
        let center = self.a + half;
        let half = half.max(1) * factor;
        Self {
            a: center - half,
            b: center + half,
        }
    }
}

/// Result of comparing two distributions at one shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dissimilarity {
    /// Mean of squared per-bin differences over the overlap.
    pub mean_sq: f64,
    /// Sum of squared per-bin differences over the overlap.
    pub sum_sq: f64,
    /// The quantity that is minimized and compared with epsilon; currently
    /// the same value as `sum_sq`.
    pub score: f64,
    pub overlap_bins: usize,
}

/// Best shift found by a search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub delta_us: i64,
    pub score: f64,
    pub overlap_bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffsetEstimate {
    /// Camera 2's start minus camera 1's start, in microseconds.
    pub delta_t21: i64,
    pub min_dissimilarity: f64,
    pub bounds: SearchBounds,
    pub windows_consumed: usize,
    pub accepted: bool,
}

/// Shift, in bins, that lays m2 (moved right by `delta`) onto m1's grid.
fn bin_shift(m1: &DensityDistribution, m2: &DensityDistribution, delta: i64) -> Result<i64> {
    if m1.tau() != m2.tau() {
        return Err(Error::MismatchedTau(m1.tau(), m2.tau()));
    }
    let tau = m1.tau() as i64;
    let offset = m2.origin() + delta - m1.origin();
    if offset.rem_euclid(tau) != 0 {
        return Err(Error::MisalignedShift {
            delta,
            tau: m1.tau(),
        });
    }
    Ok(offset / tau)
}

/// Overlapping index range in m1 for a shift of `s` bins: `[lo, hi)`.
fn overlap_range(n1: usize, n2: usize, s: i64) -> Option<(usize, usize)> {
    let lo = s.max(0);
    let hi = (n1 as i64).min(n2 as i64 + s);
    (hi > lo).then_some((lo as usize, hi as usize))
}

/// Shared scoring kernel. `a` and `b` are the overlapping counts of each
/// side; `sum_a` and `sum_b` their integer totals.
fn score_overlap(a: &[f64], b: &[f64], sum_a: u64, sum_b: u64) -> Result<Dissimilarity> {
    debug_assert_eq!(a.len(), b.len());
    if sum_a == 0 || sum_b == 0 {
        return Err(Error::EmptyOverlap);
    }
    let inv_a = 1.0 / sum_a as f64;
    let inv_b = 1.0 / sum_b as f64;
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (xa, xb) in (&mut ca).zip(&mut cb) {
        for k in 0..4 {
            let d = xa[k] * inv_a - xb[k] * inv_b;
            acc[k] += d * d;
        }
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        let d = x * inv_a - y * inv_b;
        tail += d * d;
    }
    let sum_sq = (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail;
    let n = a.len() as f64;
    Ok(Dissimilarity {
        mean_sq: sum_sq / n,
        sum_sq,
        score: sum_sq,
        overlap_bins: a.len(),
    })
}

/// Compares `m1` with `m2` shifted right by `delta` microseconds.
pub fn dissimilarity(
    m1: &DensityDistribution,
    m2: &DensityDistribution,
    delta: i64,
) -> Result<Dissimilarity> {
    let s = bin_shift(m1, m2, delta)?;
    let (lo, hi) = overlap_range(m1.len(), m2.len(), s).ok_or(Error::NoOverlap)?;
    let c1 = &m1.counts()[lo..hi];
    let c2 = &m2.counts()[(lo as i64 - s) as usize..(hi as i64 - s) as usize];
    let a: Vec<f64> = c1.iter().map(|&c| c as f64).collect();
    let b: Vec<f64> = c2.iter().map(|&c| c as f64).collect();
    score_overlap(&a, &b, c1.iter().sum(), c2.iter().sum())
}

fn snap_down(v: i64, tau: i64) -> i64 {
    v.div_euclid(tau) * tau
}

fn snap_up(v: i64, tau: i64) -> i64 {
    -snap_down(-v, tau)
}

/// Search range from the distance between the `p`-th percentile timestamps
/// of the two distributions, padded on each side by twice that distance.
pub fn search_bounds(
    m1: &DensityDistribution,
    m2: &DensityDistribution,
    p: f64,
    fallback_halfwidth: i64,
) -> Result<SearchBounds> {
    if m1.tau() != m2.tau() {
        return Err(Error::MismatchedTau(m1.tau(), m2.tau()));
    }
    let q1 = m1.percentile_timestamp(p)?;
    let q2 = m2.percentile_timestamp(p)?;
    let d = q2 - q1;
    let w = 2 * (q1 - q2).abs();
    let (a, b) = if w == 0 {
        (d - fallback_halfwidth, d + fallback_halfwidth)
    } else {
        (d - w, d + w)
    };
    let tau = m1.tau() as i64;
    SearchBounds::new(snap_down(a, tau), snap_up(b, tau))
}

/// Every shift that leaves at least `min_overlap` bins of overlap.
pub fn overlap_bounds(
    m1: &DensityDistribution,
    m2: &DensityDistribution,
    min_overlap: usize,
) -> Result<SearchBounds> {
    if m1.tau() != m2.tau() {
        return Err(Error::MismatchedTau(m1.tau(), m2.tau()));
    }
    let tau = m1.tau() as i64;
    let base = m1.origin() - m2.origin();
    let lo = min_overlap as i64 - m2.len() as i64;
    let hi = m1.len() as i64 - min_overlap as i64;
    if min_overlap > m1.len().min(m2.len()) {
        return Err(Error::NoValidCandidate {
            a: base + lo * tau,
            b: base + hi * tau,
        });
    }
    SearchBounds::new(base + lo * tau, base + hi * tau)
}

/// Candidate shifts inside `bounds` that align the two grids, ascending.
fn candidate_grid(
    m1: &DensityDistribution,
    m2: &DensityDistribution,
    bounds: SearchBounds,
) -> Result<Vec<i64>> {
    if m1.tau() != m2.tau() {
        return Err(Error::MismatchedTau(m1.tau(), m2.tau()));
    }
    let tau = m1.tau() as i64;
    let phase = (m1.origin() - m2.origin()).rem_euclid(tau);
    let first = snap_up(bounds.a - phase, tau) + phase;
    if first > bounds.b {
        return Ok(Vec::new());
    }
    let n = (bounds.b - first) / tau + 1;
    Ok((0..n).map(|k| first + k * tau).collect())
}

/// Total order used to pick a winner: lower score, then smaller |delta|,
/// then smaller delta.
fn better(x: &Candidate, y: &Candidate) -> bool {
    (x.score, x.delta_us.unsigned_abs(), x.delta_us)
        < (y.score, y.delta_us.unsigned_abs(), y.delta_us)
}

/// Scans every aligned shift in `bounds` and returns the one with the lowest
/// score. Candidates are evaluated in parallel; the reduction is a minimum
/// under a total order, so the result matches a sequential scan.
pub fn argmin_offset(
    m1: &DensityDistribution,
    m2: &DensityDistribution,
    bounds: SearchBounds,
    cfg: &SyncConfig,
) -> Result<Candidate> {
    let grid = candidate_grid(m1, m2, bounds)?;
    let a: Vec<f64> = m1.counts().iter().map(|&c| c as f64).collect();
    let b: Vec<f64> = m2.counts().iter().map(|&c| c as f64).collect();
    let prefix = |c: &[u64]| {
        let mut p = Vec::with_capacity(c.len() + 1);
        p.push(0u64);
        let mut acc = 0;
        for &v in c {
            acc += v;
            p.push(acc);
        }
        p
    };
    let pa = prefix(m1.counts());
    let pb = prefix(m2.counts());
    let n1 = m1.len();
    let n2 = m2.len();
    let tau = m1.tau() as i64;
    let base = m1.origin() - m2.origin();

    grid.par_iter()
        .filter_map(|&delta| {
            let s = (delta - base) / tau;
            let (lo, hi) = overlap_range(n1, n2, s)?;
            if hi - lo < cfg.min_overlap_bins {
                return None;
            }
            let (lo2, hi2) = ((lo as i64 - s) as usize, (hi as i64 - s) as usize);
            score_overlap(
                &a[lo..hi],
                &b[lo2..hi2],
                pa[hi] - pa[lo],
                pb[hi2] - pb[lo2],
            )
            .ok()
            .map(|d| Candidate {
                delta_us: delta,
                score: d.score,
                overlap_bins: d.overlap_bins,
            })
        })
        .reduce_with(|x, y| if better(&y, &x) { y } else { x })
        .ok_or(Error::NoValidCandidate {
            a: bounds.a,
            b: bounds.b,
        })
}

/// Plain sequential scan over every microsecond in `bounds`, scoring each
/// shift that aligns the grids through [`dissimilarity`]. Same tie-breaking
/// as [`argmin_offset`]; used to certify it.
pub fn exhaustive_offset(
    m1: &DensityDistribution,
    m2: &DensityDistribution,
    bounds: SearchBounds,
    cfg: &SyncConfig,
) -> Result<Candidate> {
    if m1.tau() != m2.tau() {
        return Err(Error::MismatchedTau(m1.tau(), m2.tau()));
    }
    let mut best: Option<Candidate> = None;
    for delta in bounds.a..=bounds.b {
        let d = match dissimilarity(m1, m2, delta) {
            Ok(d) => d,
            Err(Error::MisalignedShift { .. } | Error::NoOverlap | Error::EmptyOverlap) => continue,
            Err(e) => return Err(e),
        };
        if d.overlap_bins < cfg.min_overlap_bins {
            continue;
        }
        let replace = match &best {
            None => true,
            Some(b) => {
                d.score < b.score
                    || (d.score == b.score
                        && (delta.abs() < b.delta_us.abs()
                            || (delta.abs() == b.delta_us.abs() && delta < b.delta_us)))
            }
        };
        if replace {
            best = Some(Candidate {
                delta_us: delta,
                score: d.score,
                overlap_bins: d.overlap_bins,
            });
        }
    }
    best.ok_or(Error::NoValidCandidate {
        a: bounds.a,
        b: bounds.b,
    })
}

/// Score at every aligned shift in `bounds`; `None` where the shift has no
/// usable overlap.
pub fn dissimilarity_curve(
    m1: &DensityDistribution,
    m2: &DensityDistribution,
    bounds: SearchBounds,
) -> Result<Vec<(i64, Option<f64>)>> {
    let grid = candidate_grid(m1, m2, bounds)?;
    Ok(grid
        .into_par_iter()
        .map(|delta| (delta, dissimilarity(m1, m2, delta).ok().map(|d| d.score)))
        .collect())
}

fn bounds_for(m1: &DensityDistribution, m2: &DensityDistribution, cfg: &SyncConfig) -> Result<SearchBounds> {
    match cfg.bounds_policy {
        BoundsPolicy::Percentile => search_bounds(m1, m2, cfg.percentile, cfg.bound_fallback_halfwidth_us),
        BoundsPolicy::Overlap => overlap_bounds(m1, m2, cfg.min_overlap_bins),
    }
}

/// Estimates camera 2's start offset relative to camera 1.
///
/// Consecutive windows of `cfg.window_us` (on each camera's own clock) are
/// tried in turn until one scores below `cfg.epsilon` or `cfg.max_windows`
/// have been used. The lowest-scoring estimate seen is returned either way;
/// `accepted` tells which case occurred.
pub fn estimate_offset(
    stream1: &EventStream,
    stream2: &EventStream,
    cfg: &SyncConfig,
) -> Result<OffsetEstimate> {
    cfg.validate()?;
    if stream1.is_empty() || stream2.is_empty() {
        return Err(Error::EmptyStream);
    }
    let mut best: Option<OffsetEstimate> = None;
    let mut last_err: Option<Error> = None;
    let mut consumed = 0;

    for window in 0..cfg.max_windows {
        let start = window as u64 * cfg.window_us;
        let exhausted = [stream1, stream2]
            .into_iter()
            .find(|s| s.last_timestamp().is_none_or(|t| t < start));
        if let Some(s) = exhausted {
            if best.is_none() && last_err.is_none() {
                return Err(Error::StreamExhausted {
                    label: s.label().to_owned(),
                    window,
                });
            }
            break;
        }
        consumed = window + 1;

        let m1 = density_distribution(stream1, start, cfg.window_us, cfg.tau_us)?;
        let m2 = density_distribution(stream2, start, cfg.window_us, cfg.tau_us)?;
        if m1.is_empty() || m2.is_empty() {
            continue;
        }
        let bounds = match bounds_for(&m1, &m2, cfg) {
            Ok(b) => b,
            Err(e @ Error::NoValidCandidate { .. }) => {
                last_err = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        let candidate = match argmin_offset(&m1, &m2, bounds, cfg) {
            Ok(c) => c,
            Err(e @ Error::NoValidCandidate { .. }) => {
                last_err = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        if best
            .as_ref()
            .is_none_or(|b| candidate.score < b.min_dissimilarity)
        {
            best = Some(OffsetEstimate {
                delta_t21: candidate.delta_us,
                min_dissimilarity: candidate.score,
                bounds,
                windows_consumed: 0,
                accepted: false,
            });
        }
        if candidate.score < cfg.epsilon {
            break;
        }
    }

    match best {
        Some(mut est) => {
            est.windows_consumed = consumed;
            est.accepted = est.min_dissimilarity < cfg.epsilon;
            Ok(est)
        }
        None => Err(last_err.unwrap_or(Error::StreamExhausted {
            label: stream2.label().to_owned(),
            window: consumed,
        })),
    }
}
