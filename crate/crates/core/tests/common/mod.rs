#![allow(dead_code)]

use evsync::synthgen::{make_profile, sample_streams, GeneratorConfig, ProfileKind, SyntheticStreams};
use evsync::{build_stream, Event, EventStream, Polarity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SECOND: i64 = 1_000_000;

/// Two or more cameras watching one scene, `duration_s` long.
pub fn scene(seed: u64, kind: ProfileKind, duration_s: u64, cfg: &GeneratorConfig) -> SyntheticStreams {
    let profile = make_profile(seed, duration_s * SECOND as u64, 1000, kind).unwrap();
    sample_streams(&profile, cfg).unwrap()
}

/// Start offsets for a pair whose true `delta_t21` is `delta`, keeping every
/// camera's start at or after the scene's start.
pub fn pair_offsets(delta: i64) -> Vec<i64> {
    if delta >= 0 {
        vec![0, delta]
    } else {
        vec![-delta, 0]
    }
}

/// Events of `head` before `at`, then events of `tail` from `at` on.
pub fn splice(head: &EventStream, tail: &EventStream, at: u64) -> EventStream {
    let mut events: Vec<_> = head.events()[..head.lower_bound(at)].to_vec();
    events.extend_from_slice(&tail.events()[tail.lower_bound(at)..]);
    build_stream(events, tail.geometry(), tail.label()).unwrap()
}

/// Uniformly scattered events over `[0, end)`: a stream with no temporal
/// structure at all.
pub fn white_noise(seed: u64, count: usize, end: u64, like: &EventStream) -> EventStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = like.geometry();
    let mut ts: Vec<u64> = (0..count).map(|_| rng.random_range(0..end)).collect();
    ts.sort_unstable();
    let events = ts
        .into_iter()
        .map(|t| Event::new(rng.random_range(0..g.width()), rng.random_range(0..g.height()), t, Polarity::On))
        .collect();
    build_stream(events, g, like.label()).unwrap()
}

/// A camera pair whose first `window_s` seconds are uncorrelated (camera 2
/// records independent noise at its usual event rate), and which agree
/// from then on.
pub fn adversarial_pair(seed: u64, delta: i64, window_s: u64) -> (EventStream, EventStream) {
    let mut cfg = GeneratorConfig::noiseless(pair_offsets(delta));
    cfg.count_noise = 0.05;
    let shared = scene(seed, ProfileKind::Bursts, 40, &cfg);
    let at = window_s * SECOND as u64;
    let cam2 = &shared.streams[1];
    let noise = white_noise(seed ^ 0x5eed, cam2.lower_bound(at), at, cam2);
    (shared.streams[0].clone(), splice(&noise, cam2, at))
}

/// Same events with every timestamp moved by `shift` microseconds.
pub fn shifted(stream: &EventStream, shift: i64) -> EventStream {
    evsync::apply_offset(stream, shift).stream
}
