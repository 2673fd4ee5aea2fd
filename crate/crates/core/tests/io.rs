mod common;

use std::path::{Path, PathBuf};

use common::*;
use evsync::io::{export_density_table, read_events, read_events_csv, report_json, write_events, write_events_csv};
use evsync::synthgen::{GeneratorConfig, ProfileKind};
use evsync::{
    build_stream, density_distribution, synchronize, Error, Event, EventStream, OffsetEstimate,
    Polarity, ReportEntry, SearchBounds, SensorGeometry, SyncConfig, SyncReport,
};
use proptest::prelude::*;

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Compares against a checked-in file; `UPDATE_GOLDEN=1` rewrites it.
fn check_golden(name: &str, actual: &str) {
    let path = golden(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap();
    assert!(expected == actual, "{name} differs:\n{actual}");
}

fn events_strategy() -> impl Strategy<Value = (u32, u32, Vec<Event>)> {
    (1u32..400, 1u32..300).prop_flat_map(|(w, h)| {
        let ev = (0..w, 0..h, 0u64..5_000_000, any::<bool>()).prop_map(|(x, y, t, on)| {
            Event::new(x, y, t, if on { Polarity::On } else { Polarity::Off })
        });
        (Just(w), Just(h), prop::collection::vec(ev, 0..300)).prop_map(|(w, h, mut v)| {
            v.sort_by_key(|e| e.t);
            (w, h, v)
        })
    })
}

proptest! {
    #[test]
    fn csv_round_trip((w, h, events) in events_strategy(), label in "[a-zA-Z0-9_ .-]{0,20}") {
        let s = build_stream(events, SensorGeometry::new(w, h).unwrap(), label.trim()).unwrap();
        let mut buf = Vec::new();
        write_events(&s, &mut buf).unwrap();
        let back = read_events(buf.as_slice(), Path::new("mem")).unwrap();
        prop_assert_eq!(back, s);
    }
}

#[test]
fn million_event_file_round_trips() {
    let g = GeneratorConfig::noiseless(vec![0]);
    let mut s = scene(8, ProfileKind::RandomWalk, 40, &g).streams.remove(0);
    assert!(s.len() > 1_000_000, "{}", s.len());
    s = build_stream(s.events()[..1_000_000].to_vec(), s.geometry(), "big").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("big.csv");
    write_events_csv(&s, &path).unwrap();
    assert_eq!(read_events_csv(&path).unwrap(), s);
}

#[test]
fn bad_rows_report_their_line() {
    let text = "# evsync v1 width=10 height=10 label=x\n0,1,1,1\n\n5,1,1,2\n";
    match read_events(text.as_bytes(), Path::new("f.csv")) {
        Err(Error::MalformedRow { line, .. }) => assert_eq!(line, 4),
        other => panic!("{other:?}"),
    }
    let text = "# evsync v1 width=10 height=10 label=x\n5,1,1,1\n4,1,1,1\n";
    assert!(matches!(
        read_events(text.as_bytes(), Path::new("f.csv")),
        Err(Error::InvalidFile { .. })
    ));
    assert!(matches!(
        read_events_csv("/nonexistent/dir/f.csv"),
        Err(Error::Io { .. })
    ));
}

#[test]
fn density_table_sums_to_one() {
    let g = GeneratorConfig::noiseless(vec![0]);
    let s = scene(2, ProfileKind::Bursts, 3, &g).streams.remove(0);
    let m = density_distribution(&s, 0, 2_000_000, 1000).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    export_density_table(&m, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t_ms,mass"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (t, m) = l.split_once(',').unwrap();
            (t.parse().unwrap(), m.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 2000);
    assert_eq!(rows[1].0, 1.0);
    let total: f64 = rows.iter().map(|r| r.1).sum();
    assert!((total - 1.0).abs() < 1e-9, "{total}");
}

#[test]
fn report_layout_is_stable() {
    let report = SyncReport {
        reference_label: "left".into(),
        entries: vec![
            ReportEntry {
                label: "left".into(),
                delta_vs_reference: 0,
                min_dissimilarity: Some(0.0),
                accepted: true,
                windows_consumed: 0,
                dropped_events: 0,
                error: None,
            },
            ReportEntry {
                label: "right".into(),
                delta_vs_reference: -4_067_000,
                min_dissimilarity: Some(2.5e-5),
                accepted: true,
                windows_consumed: 2,
                dropped_events: 17,
                error: None,
            },
            ReportEntry {
                label: "broken".into(),
                delta_vs_reference: 0,
                min_dissimilarity: None,
                accepted: false,
                windows_consumed: 0,
                dropped_events: 0,
                error: Some("stream is empty".into()),
            },
        ],
    };
    let estimates = vec![
        None,
        Some(OffsetEstimate {
            delta_t21: -4_067_000,
            min_dissimilarity: 2.5e-5,
            bounds: SearchBounds::new(-9_000_000, 9_000_000).unwrap(),
            windows_consumed: 2,
            accepted: true,
        }),
        None,
    ];
    check_golden("report_layout.json", &report_json(&report, &estimates));
}

#[test]
fn synthetic_sync_report_is_stable() {
    let g = GeneratorConfig::noiseless(vec![1_500_000, 0, 3_250_000]);
    let streams: Vec<EventStream> = scene(42, ProfileKind::Bursts, 25, &g).streams;
    let out = synchronize(&streams, 0, &SyncConfig::default()).unwrap();
    check_golden("synthetic_report.json", &report_json(&out.report, &out.estimates));
}
