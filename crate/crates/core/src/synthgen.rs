//! Synthetic multi-camera event streams with known start offsets.
//!
//! All cameras watch one scene whose overall activity over time is a scalar
//! profile (standing in for image gradient times motion, summed over the
//! sensor). Camera `j` emits `floor(gain_j * activity / C)` events per bin,
//! optionally perturbed, and its clock starts `offsets[j]` microseconds into
//! world time. Pixel coordinates are drawn uniformly and carry no meaning.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{build_stream, Event, EventStream, Polarity, SensorGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    /// Mean-reverting random walk, clipped at zero.
    RandomWalk,
    /// Low baseline with sparse sharp-onset bursts.
    Bursts,
    /// Rectified sum of a few incommensurate sinusoids.
    Sinusoid,
}

impl std::str::FromStr for ProfileKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "random-walk" => Ok(ProfileKind::RandomWalk),
            "bursts" => Ok(ProfileKind::Bursts),
            "sinusoid" => Ok(ProfileKind::Sinusoid),
            other => Err(format!("unknown profile kind `{other}`")),
        }
    }
}

/// Scene activity per bin, scaled to unit mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityProfile {
    pub samples: Vec<f64>,
    pub tau: u64,
    pub duration: u64,
    pub seed: u64,
}

const MIN_POSITIVE_FRACTION: f64 = 0.1;

/// Deterministic activity profile of `duration / tau` bins.
pub fn make_profile(seed: u64, duration: u64, tau: u64, kind: ProfileKind) -> Result<ActivityProfile> {
    if tau == 0 || duration == 0 || !duration.is_multiple_of(tau) {
        return Err(Error::InvalidDuration { duration, tau });
    }
    let n = (duration / tau) as usize;
    let mut attempt = 0u64;
    loop {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, 0x5eed ^ attempt));
        let mut samples = match kind {
            ProfileKind::RandomWalk => random_walk(&mut rng, n, tau),
            ProfileKind::Bursts => bursts(&mut rng, n, tau),
            ProfileKind::Sinusoid => sinusoid(&mut rng, n, tau),
        };
        let positive = samples.iter().filter(|&&v| v > 0.0).count();
        if positive as f64 >= MIN_POSITIVE_FRACTION * n as f64 {
            let mean = samples.iter().sum::<f64>() / n as f64;
            for v in &mut samples {
                *v /= mean;
            }
            return Ok(ActivityProfile {
                samples,
                tau,
                duration,
                seed,
            });
        }
        attempt += 1;
    }
}

fn random_walk(rng: &mut ChaCha8Rng, n: usize, tau: u64) -> Vec<f64> {
    // Ornstein-Uhlenbeck around 1 with a ~200 ms correlation time.
    let bins_per_s = 1e6 / tau as f64;
    let theta = 1.0 / (0.2 * bins_per_s);
    let sigma = 0.6 * (2.0 * theta).sqrt();
    let mut x = 1.0 + 0.5 * rng.sample::<f64, _>(StandardNormal);
    (0..n)
        .map(|_| {
            x += theta * (1.0 - x) + sigma * rng.sample::<f64, _>(StandardNormal);
            x.max(0.0)
        })
        .collect()
}

fn bursts(rng: &mut ChaCha8Rng, n: usize, tau: u64) -> Vec<f64> {
    let bins_per_s = 1e6 / tau as f64;
    let mut out = vec![0.25; n];
    let gap = Exp::new(2.0 / bins_per_s).expect("positive rate");
    let amp = Exp::new(1.0 / 3.0).expect("positive rate");
    let mut at = gap.sample(rng);
    while (at as usize) < n {
        let start = at as usize;
        let height = 0.5 + amp.sample(rng);
        let rise = (rng.random_range(0.005..0.02) * bins_per_s).max(1.0);
        let decay = (rng.random_range(0.03..0.3) * bins_per_s).max(1.0);
        let len = (rise + 8.0 * decay) as usize;
        for (k, v) in out[start..n.min(start + len)].iter_mut().enumerate() {
            let k = k as f64;
            *v += if k < rise {
                height * k / rise
            } else {
                height * (-(k - rise) / decay).exp()
            };
        }
        at += gap.sample(rng);
    }
    out
}

fn sinusoid(rng: &mut ChaCha8Rng, n: usize, tau: u64) -> Vec<f64> {
    let bins_per_s = 1e6 / tau as f64;
    let waves: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            let period = rng.random_range(0.3..5.0) * bins_per_s;
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let amp = rng.random_range(0.5..1.5);
            (std::f64::consts::TAU / period, phase, amp)
        })
        .collect();
    (0..n)
        .map(|k| {
            let k = k as f64;
            let v: f64 = waves.iter().map(|(w, ph, a)| a * (w * k + ph).sin()).sum();
            (v + 0.2).abs()
        })
        .collect()
}

/// SplitMix64-style mixing for deriving independent per-purpose seeds.
fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Activity needed per emitted event.
    pub contrast_threshold: f64,
    pub geometry: SensorGeometry,
    /// World time at which each camera's clock starts, in microseconds.
    pub offsets: Vec<i64>,
    /// Relative per-bin count jitter (standard deviation of a multiplicative
    /// Gaussian factor).
    pub count_noise: f64,
    /// Standard deviation of per-event timestamp jitter, in microseconds.
    pub timestamp_jitter_us: f64,
    pub gains: Vec<f64>,
}

impl GeneratorConfig {
    /// Equal gains, no noise, about 32 events per bin at unit activity.
    pub fn noiseless(offsets: Vec<i64>) -> Self {
        let gains = vec![1.0; offsets.len()];
        Self {
            contrast_threshold: 1.0 / 32.0,
            geometry: SensorGeometry::davis346(),
            offsets,
            count_noise: 0.0,
            timestamp_jitter_us: 0.0,
            gains,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.contrast_threshold > 0.0) || !self.contrast_threshold.is_finite() {
            return bad("contrast threshold must be positive".into());
        }
        if self.offsets.is_empty() {
            return bad("at least one camera is required".into());
        }
        if self.gains.len() != self.offsets.len() {
            return bad(format!(
                "{} gains given for {} cameras",
                self.gains.len(),
                self.offsets.len()
            ));
        }
        if self.gains.iter().any(|&g| !(g > 0.0) || !g.is_finite()) {
            return bad("gains must be positive".into());
        }
        if !(self.count_noise >= 0.0) || !(self.timestamp_jitter_us >= 0.0) {
            return bad("noise levels must be non-negative".into());
        }
        Ok(())
    }
}

/// Generated streams plus the offsets they were generated with.
#[derive(Debug, Clone)]
pub struct SyntheticStreams {
    pub streams: Vec<EventStream>,
    pub offsets: Vec<i64>,
}

impl SyntheticStreams {
    /// Ground-truth `delta_t21` of camera `j` against camera `reference`.
    pub fn true_delta(&self, reference: usize, j: usize) -> i64 {
        self.offsets[j] - self.offsets[reference]
    }
}

/// Samples one stream per camera, each on its own running clock.
pub fn sample_streams(profile: &ActivityProfile, cfg: &GeneratorConfig) -> Result<SyntheticStreams> {
    cfg.validate()?;
    let streams = (0..cfg.offsets.len())
        .into_par_iter()
        .map(|j| sample_camera(profile, cfg, j))
        .collect::<Result<Vec<_>>>()?;
    Ok(SyntheticStreams {
        streams,
        offsets: cfg.offsets.clone(),
    })
}

/// Event count for one bin at zero noise.
pub fn noiseless_count(activity: f64, gain: f64, contrast_threshold: f64) -> u64 {
    (gain * activity / contrast_threshold).floor().max(0.0) as u64
}

fn sample_camera(profile: &ActivityProfile, cfg: &GeneratorConfig, j: usize) -> Result<EventStream> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(profile.seed, j as u64 + 1));
    let tau = profile.tau as i64;
    let start = cfg.offsets[j];
    let gain = cfg.gains[j];
    let jitter = (cfg.timestamp_jitter_us > 0.0)
        .then(|| Normal::new(0.0, cfg.timestamp_jitter_us).expect("finite jitter"));
    let (w, h) = (cfg.geometry.width(), cfg.geometry.height());

    let mut events: Vec<Event> = Vec::new();
    let mut in_bin: Vec<i64> = Vec::new();
    for (k, &activity) in profile.samples.iter().enumerate() {
        let rate = gain * activity / cfg.contrast_threshold;
        let count = if cfg.count_noise > 0.0 {
            let factor = 1.0 + cfg.count_noise * rng.sample::<f64, _>(StandardNormal);
            (rate * factor).floor().max(0.0) as u64
        } else {
            noiseless_count(activity, gain, cfg.contrast_threshold)
        };
        let bin_start = k as i64 * tau;
        in_bin.clear();
        in_bin.extend((0..count).map(|_| bin_start + rng.random_range(0..tau)));
        in_bin.sort_unstable();
        for &at in &in_bin {
            let mut world = at;
            if let Some(n) = &jitter {
                world += n.sample(&mut rng).round() as i64;
            }
            // One draw covers pixel and polarity.
            let bits: u64 = rng.random();
            let x = (((bits & 0xFFFF_FFFF) * u64::from(w)) >> 32) as u32;
            let y = ((((bits >> 32) & 0x7FFF_FFFF) * u64::from(h)) >> 31) as u32;
            let p = if bits >> 63 == 1 {
                Polarity::On
            } else {
                Polarity::Off
            };
            let local = world - start;
            if local >= 0 {
                events.push(Event::new(x, y, local as u64, p));
            }
        }
    }
    if jitter.is_some() {
        // Nearly sorted already; the stable sort is close to linear here.
        events.sort_by_key(|e| e.t);
    }
    build_stream(events, cfg.geometry, format!("cam{j}"))
}
