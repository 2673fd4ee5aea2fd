mod common;

use common::*;
use evsync::synthgen::{GeneratorConfig, ProfileKind};
use evsync::{build_stream, estimate_offset, Error, EventStream, SyncConfig};

#[test]
fn recovers_a_known_offset() {
    let mut g = GeneratorConfig::noiseless(pair_offsets(2_500_000));
    g.count_noise = 0.1;
    g.timestamp_jitter_us = 500.0;
    let s = scene(3, ProfileKind::Bursts, 30, &g);
    let est = estimate_offset(&s.streams[0], &s.streams[1], &SyncConfig::default()).unwrap();
    assert!((est.delta_t21 - 2_500_000).abs() <= 1000, "{est:?}");
    assert!(est.accepted);
    assert!(est.bounds.contains(est.delta_t21));
    assert_eq!(est.delta_t21 % 1000, 0);
}

#[test]
fn identical_streams_agree_at_zero() {
    let g = GeneratorConfig::noiseless(vec![0]);
    let s = scene(5, ProfileKind::RandomWalk, 20, &g);
    let est = estimate_offset(&s.streams[0], &s.streams[0], &SyncConfig::default()).unwrap();
    assert_eq!(est.delta_t21, 0);
    assert_eq!(est.min_dissimilarity, 0.0);
    assert_eq!(est.windows_consumed, 1);
    assert!(est.accepted);
}

#[test]
fn unrelated_first_window_triggers_retry() {
    let (a, b) = adversarial_pair(21, 1_300_000, 10);
    let cfg = SyncConfig::default();
    let est = estimate_offset(&a, &b, &cfg).unwrap();
    assert!(est.accepted, "{est:?}");
    assert!(est.windows_consumed >= 2, "{est:?}");
    assert!((est.delta_t21 - 1_300_000).abs() <= 1000, "{est:?}");

    let once = SyncConfig { max_windows: 1, ..cfg };
    let est = estimate_offset(&a, &b, &once).unwrap();
    assert!(!est.accepted, "{est:?}");
    assert_eq!(est.windows_consumed, 1);
}

#[test]
fn empty_and_exhausted_streams() {
    let g = GeneratorConfig::noiseless(vec![0]);
    let s = scene(1, ProfileKind::Bursts, 5, &g).streams.remove(0);
    let empty = build_stream(vec![], s.geometry(), "empty").unwrap();
    assert!(matches!(
        estimate_offset(&s, &empty, &SyncConfig::default()),
        Err(Error::EmptyStream)
    ));
    // Camera 2 only has events far beyond the first windows.
    let late = shifted(&s, 100 * SECOND);
    let cfg = SyncConfig { max_windows: 2, ..SyncConfig::default() };
    let err = estimate_offset(&s, &late, &cfg).unwrap_err();
    assert!(matches!(err, Error::StreamExhausted { .. }), "{err}");
    // Both start in step but camera 1 stops after 10 s: the first window is
    // used, the second finds camera 1 exhausted.
    let long = scene(1, ProfileKind::Bursts, 30, &g).streams.remove(0);
    let short = build_stream(
        long.events()[..long.lower_bound(10 * SECOND as u64)].to_vec(),
        long.geometry(),
        "short",
    )
    .unwrap();
    let zero = SyncConfig { epsilon: 0.0, ..SyncConfig::default() };
    let est = estimate_offset(&short, &long, &zero).unwrap();
    assert!(!est.accepted);
    assert_eq!(est.windows_consumed, 1);
    assert_eq!(est.delta_t21, 0);
}

fn noisy_pair(seed: u64, delta: i64) -> (EventStream, EventStream) {
    let mut g = GeneratorConfig::noiseless(pair_offsets(delta));
    g.count_noise = 0.1;
    g.timestamp_jitter_us = 1000.0;
    g.gains = vec![1.0, 0.8];
    let s = scene(seed, ProfileKind::Bursts, 30, &g);
    (s.streams[0].clone(), s.streams[1].clone())
}

#[test]
fn swapping_cameras_flips_the_sign() {
    let cfg = SyncConfig::default();
    for (seed, delta) in [(1, 1_700_000), (2, -3_250_000), (3, 0)] {
        let (a, b) = noisy_pair(seed, delta);
        let forward = estimate_offset(&a, &b, &cfg).unwrap().delta_t21;
        let backward = estimate_offset(&b, &a, &cfg).unwrap().delta_t21;
        assert!((forward + backward).abs() <= 1000, "{forward} vs {backward}");
    }
}

#[test]
fn clock_shift_moves_the_estimate_exactly() {
    let g = GeneratorConfig::noiseless(pair_offsets(800_000));
    let s = scene(9, ProfileKind::RandomWalk, 30, &g);
    let cfg = SyncConfig::default();
    let base = estimate_offset(&s.streams[0], &s.streams[1], &cfg).unwrap();
    assert_eq!(base.delta_t21, 800_000);
    for shift in [2_000_000i64, 517_000, 3_000] {
        let moved = shifted(&s.streams[1], shift);
        let est = estimate_offset(&s.streams[0], &moved, &cfg).unwrap();
        assert_eq!(est.delta_t21, 800_000 - shift);
        assert!(est.accepted);
    }
}

#[test]
fn duplicating_events_changes_nothing() {
    let (a, b) = noisy_pair(4, -1_234_000);
    let doubled = {
        let mut events = Vec::with_capacity(2 * b.len());
        for e in b.events() {
            events.push(*e);
            events.push(*e);
        }
        build_stream(events, b.geometry(), b.label()).unwrap()
    };
    let cfg = SyncConfig::default();
    let x = estimate_offset(&a, &b, &cfg).unwrap();
    let y = estimate_offset(&a, &doubled, &cfg).unwrap();
    assert_eq!(x.delta_t21, y.delta_t21);
    assert!((x.min_dissimilarity - y.min_dissimilarity).abs() <= 1e-15);
}

#[test]
fn camera_gain_does_not_move_the_optimum() {
    let cfg = SyncConfig::default();
    for gain in [0.5, 0.7, 1.3, 2.0] {
        let mut g = GeneratorConfig::noiseless(pair_offsets(4_067_000));
        g.gains = vec![1.0, gain];
        let s = scene(12, ProfileKind::Bursts, 30, &g);
        let est = estimate_offset(&s.streams[0], &s.streams[1], &cfg).unwrap();
        assert!((est.delta_t21 - 4_067_000).abs() <= 1000, "gain {gain}: {est:?}");
    }
}

#[test]
fn acceptance_flag_tracks_epsilon() {
    let (a, b) = noisy_pair(6, 600_000);
    let est = estimate_offset(&a, &b, &SyncConfig::default()).unwrap();
    for eps in [0.0, est.min_dissimilarity, est.min_dissimilarity * 1.0001, 1.0] {
        let cfg = SyncConfig { epsilon: eps, max_windows: 1, ..SyncConfig::default() };
        let e = estimate_offset(&a, &b, &cfg).unwrap();
        assert_eq!(e.accepted, e.min_dissimilarity < eps, "eps {eps}: {e:?}");
    }
}

#[test]
fn percentile_policy_searches_the_percentile_range() {
    // A single burst inside both windows: the percentile distance tracks
    // the offset and the range reaches it.
    let mut g = GeneratorConfig::noiseless(pair_offsets(-700_000));
    g.gains = vec![1.0, 1.0];
    let s = scene(2, ProfileKind::Bursts, 12, &g);
    let cfg = SyncConfig {
        bounds_policy: evsync::BoundsPolicy::Percentile,
        ..SyncConfig::default()
    };
    let est = estimate_offset(&s.streams[0], &s.streams[1], &cfg).unwrap();
    assert!(est.bounds.contains(est.delta_t21));
    let m1 = evsync::density_distribution(&s.streams[0], 0, cfg.window_us, 1000).unwrap();
    let m2 = evsync::density_distribution(&s.streams[1], 0, cfg.window_us, 1000).unwrap();
    let expected = evsync::search_bounds(&m1, &m2, 50.0, 500_000).unwrap();
    assert_eq!(est.bounds, expected);
}
