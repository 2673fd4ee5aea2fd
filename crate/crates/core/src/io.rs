//! Event CSV files, density tables and synchronization reports.
//!
//! Event files start with one header line
//!
//! ```text
//! # evsync v1 width=346 height=260 label=cam0
//! ```
//!
//! followed by one `t_us,x,y,p` row per event with `p` either `1` or `-1`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::density::DensityDistribution;
use crate::error::{Error, Result};
use crate::estimator::OffsetEstimate;
use crate::event::{build_stream, Event, EventStream, Polarity, SensorGeometry};
use crate::sync::SyncReport;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "# evsync";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventFileHeader {
    pub format_version: u32,
    pub width: u32,
    pub height: u32,
    pub label: String,
}

impl EventFileHeader {
    pub fn for_stream(stream: &EventStream) -> Self {
        let g = stream.geometry();
        Self {
            format_version: FORMAT_VERSION,
            width: g.width(),
            height: g.height(),
            label: stream.label().to_owned(),
        }
    }

    pub fn parse(line: &str) -> std::result::Result<Self, String> {
        let rest = line
            .strip_prefix(MAGIC)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| format!("expected line to start with `{MAGIC} `"))?;
        let (version, rest) = rest
            .split_once(' ')
            .ok_or("missing fields after version")?;
        let format_version = version
            .strip_prefix('v')
            .and_then(|v| v.parse::<u32>().ok())
            .ok_or_else(|| format!("bad version `{version}`"))?;
        if format_version != FORMAT_VERSION {
            return Err(format!("unsupported version {format_version}"));
        }
        let (width, rest) = take_field(rest, "width")?;
        let (height, rest) = take_field(rest, "height")?;
        // The label runs to the end of the line and may contain spaces.
        let label = rest
            .strip_prefix("label=")
            .ok_or("missing `label=`")?
            .to_owned();
        let parse_dim = |s: &str, name: &str| {
            s.parse::<u32>()
                .map_err(|_| format!("bad {name} `{s}`"))
        };
        Ok(Self {
            format_version,
            width: parse_dim(width, "width")?,
            height: parse_dim(height, "height")?,
            label,
        })
    }

    pub fn to_line(&self) -> String {
        format!(
            "{MAGIC} v{} width={} height={} label={}",
            self.format_version, self.width, self.height, self.label
        )
    }
}

fn take_field<'a>(s: &'a str, key: &str) -> std::result::Result<(&'a str, &'a str), String> {
    let s = s
        .strip_prefix(key)
        .and_then(|r| r.strip_prefix('='))
        .ok_or_else(|| format!("missing `{key}=`"))?;
    s.split_once(' ')
        .ok_or_else(|| format!("missing fields after {key}"))
}

fn parse_row(line: &str) -> std::result::Result<Event, String> {
    let mut parts = line.split(',');
    let mut next = |name: &str| {
        parts
            .next()
            .map(str::trim)
            .ok_or_else(|| format!("missing {name}"))
    };
    let t = next("t_us")?;
    let x = next("x")?;
    let y = next("y")?;
    let p = next("p")?;
    if parts.next().is_some() {
        return Err("too many fields".into());
    }
    let t = t.parse::<u64>().map_err(|_| format!("bad timestamp `{t}`"))?;
    let x = x.parse::<u32>().map_err(|_| format!("bad x `{x}`"))?;
    let y = y.parse::<u32>().map_err(|_| format!("bad y `{y}`"))?;
    let p = p
        .parse::<i8>()
        .ok()
        .and_then(Polarity::from_i8)
        .ok_or_else(|| format!("bad polarity `{p}`"))?;
    Ok(Event::new(x, y, t, p))
}

/// Parses an event CSV from any reader. `path` is used in error messages.
pub fn read_events<R: BufRead>(reader: R, path: &Path) -> Result<EventStream> {
    let mut lines = reader.lines();
    let header_line = match lines.next() {
        Some(line) => line.map_err(|e| Error::io(path, e))?,
        None => {
            return Err(Error::MalformedHeader {
                path: path.into(),
                reason: "file is empty".into(),
            })
        }
    };
    let header = EventFileHeader::parse(header_line.trim_end_matches('\r')).map_err(|reason| {
        Error::MalformedHeader {
            path: path.into(),
            reason,
        }
    })?;
    let geometry = SensorGeometry::new(header.width, header.height).map_err(|e| {
        Error::MalformedHeader {
            path: path.into(),
            reason: e.to_string(),
        }
    })?;

    let mut events = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let event = parse_row(line).map_err(|reason| Error::MalformedRow {
            path: path.into(),
            line: i + 2,
            reason,
        })?;
        events.push(event);
    }
    build_stream(events, geometry, header.label).map_err(|e| Error::InvalidFile {
        path: path.into(),
        source: Box::new(e),
    })
}

pub fn read_events_csv(path: impl AsRef<Path>) -> Result<EventStream> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_events(BufReader::new(file), path)
}

pub fn write_events<W: Write>(stream: &EventStream, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", EventFileHeader::for_stream(stream).to_line())?;
    for e in stream.events() {
        writeln!(out, "{},{},{},{}", e.t, e.x, e.y, e.p.as_i8())?;
    }
    out.flush()
}

pub fn write_events_csv(stream: &EventStream, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_events(stream, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct JsonBounds {
    a_us: i64,
    b_us: i64,
}

#[derive(Serialize)]
struct JsonEntry<'a> {
    label: &'a str,
    delta_us: i64,
    min_dissimilarity: Option<f64>,
    accepted: bool,
    windows_consumed: usize,
    bounds: Option<JsonBounds>,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    reference: &'a str,
    entries: Vec<JsonEntry<'a>>,
}

/// Renders the report as pretty-printed JSON with a fixed key order.
///
/// `estimates` runs parallel to `report.entries`; entries without an
/// estimate (the reference, failed streams) get `"bounds": null`.
pub fn report_json(report: &SyncReport, estimates: &[Option<OffsetEstimate>]) -> String {
    let entries = report
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| JsonEntry {
            label: &e.label,
            delta_us: e.delta_vs_reference,
            min_dissimilarity: e.min_dissimilarity,
            accepted: e.accepted,
            windows_consumed: e.windows_consumed,
            bounds: estimates.get(i).and_then(Option::as_ref).map(|est| JsonBounds {
                a_us: est.bounds.a,
                b_us: est.bounds.b,
            }),
        })
        .collect();
    let doc = JsonReport {
        reference: &report.reference_label,
        entries,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}

pub fn write_report_json(
    report: &SyncReport,
    estimates: &[Option<OffsetEstimate>],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, report_json(report, estimates)).map_err(|e| Error::io(path, e))
}

pub fn write_density_table<W: Write>(dist: &DensityDistribution, mut out: W) -> std::io::Result<()> {
    writeln!(out, "t_ms,mass")?;
    if dist.total_events() > 0 {
        for (k, mass) in dist.bins().iter().enumerate() {
            let t_ms = dist.bin_start(k) as f64 / 1000.0;
            writeln!(out, "{t_ms},{mass}")?;
        }
    }
    out.flush()
}

/// Writes `t_ms,mass` rows, one per bin, for external plotting. An empty
/// distribution produces only the header.
pub fn export_density_table(dist: &DensityDistribution, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_density_table(dist, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn parse(text: &str) -> Result<EventStream> {
        read_events(Cursor::new(text), Path::new("mem.csv"))
    }

    #[test]
    fn parses_two_rows() {
        let s = parse("# evsync v1 width=346 height=260 label=left cam\n0,5,5,1\n1000,6,5,-1\n").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.label(), "left cam");
        assert_eq!(s.geometry(), SensorGeometry::davis346());
        assert_eq!(s.events()[1], Event::new(6, 5, 1000, Polarity::Off));
    }

    #[test]
    fn bad_row_reports_its_line() {
        let err = parse("# evsync v1 width=346 height=260 label=a\n0,5,5,1\nabc,5,5,1\n").unwrap_err();
        assert!(matches!(err, Error::MalformedRow { line: 3, .. }), "{err}");
        let err = parse("# evsync v1 width=346 height=260 label=a\n0,5,5,0\n").unwrap_err();
        assert!(matches!(err, Error::MalformedRow { line: 2, .. }));
        let err = parse("# evsync v1 width=346 height=260 label=a\n0,5,5\n").unwrap_err();
        assert!(matches!(err, Error::MalformedRow { line: 2, .. }));
        let err = parse("# evsync v1 width=346 height=260 label=a\n0,5,5,1,9\n").unwrap_err();
        assert!(matches!(err, Error::MalformedRow { line: 2, .. }));
    }

    #[test]
    fn bad_headers() {
        for text in [
            "",
            "0,5,5,1\n",
            "# evsync v2 width=346 height=260 label=a\n",
            "# evsync v1 width=x height=260 label=a\n",
            "# evsync v1 height=260 width=346 label=a\n",
            "# evsync v1 width=346 height=260\n",
            "# evsync v1 width=0 height=260 label=a\n",
        ] {
            assert!(
                matches!(parse(text), Err(Error::MalformedHeader { .. })),
                "{text:?}"
            );
        }
    }

    #[test]
    fn stream_validation_errors_surface() {
        let err = parse("# evsync v1 width=10 height=10 label=a\n5,1,1,1\n3,1,1,1\n").unwrap_err();
        match err {
            Error::InvalidFile { source, .. } => {
                assert!(matches!(*source, Error::OutOfOrderTimestamps { index: 1, .. }))
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn empty_stream_writes_header_only() {
        let s = build_stream(vec![], SensorGeometry::davis346(), "cam0").unwrap();
        let mut buf = Vec::new();
        write_events(&s, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "# evsync v1 width=346 height=260 label=cam0\n"
        );
    }

    #[test]
    fn density_table_rows() {
        let d = DensityDistribution::from_counts(vec![1, 2, 1], 1000, 2000).unwrap();
        let mut buf = Vec::new();
        write_density_table(&d, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t_ms,mass\n2,0.25\n3,0.5\n4,0.25\n"
        );
        let empty = DensityDistribution::from_counts(vec![0, 0], 1000, 0).unwrap();
        let mut buf = Vec::new();
        write_density_table(&empty, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t_ms,mass\n");
    }

    #[test]
    fn sub_millisecond_bins_keep_fractional_times() {
        let d = DensityDistribution::from_counts(vec![1, 1], 500, 0).unwrap();
        let mut buf = Vec::new();
        write_density_table(&d, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t_ms,mass\n0,0.5\n0.5,0.5\n");
    }

    #[test]
    fn unwritable_path_is_io_failure() {
        let s = build_stream(vec![], SensorGeometry::davis346(), "cam0").unwrap();
        let err = write_events_csv(&s, "/nonexistent-dir/x/y.csv").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
