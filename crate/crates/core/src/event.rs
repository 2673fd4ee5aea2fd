//! Event, sensor geometry and per-camera event streams.
//!
//! Timestamps are integer microseconds on the camera's own clock, which
//! starts at zero when the camera begins capturing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sign of the brightness change that fired an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    On,
    Off,
}

impl Polarity {
    pub fn as_i8(self) -> i8 {
        match self {
            Polarity::On => 1,
            Polarity::Off => -1,
        }
    }

    pub fn from_i8(value: i8) -> Option<Self> {
        match value {
            1 => Some(Polarity::On),
            -1 => Some(Polarity::Off),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub x: u32,
    pub y: u32,
    /// Microseconds since the camera started.
    pub t: u64,
    pub p: Polarity,
}

impl Event {
    pub fn new(x: u32, y: u32, t: u64, p: Polarity) -> Self {
        Self { x, y, t, p }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SensorGeometry {
    width: u32,
    height: u32,
}

impl SensorGeometry {
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidGeometry { width, height });
        }
        Ok(Self { width, height })
    }

    /// DAVIS 346 resolution.
    pub fn davis346() -> Self {
        Self {
            width: 346,
            height: 260,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Total pixel count.
    pub fn pixels(&self) -> u64 {
        u64::from(self.width) * u64::from(self.height)
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x < self.width && y < self.height
    }
}

/// Time-ordered events from one camera.
///
/// Only constructible through [`build_stream`], so every instance is sorted
/// by timestamp and every pixel lies on the sensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventStream {
    events: Vec<Event>,
    geometry: SensorGeometry,
    label: String,
}

/// Validates and wraps a sequence of events. Never reorders.
pub fn build_stream(
    events: Vec<Event>,
    geometry: SensorGeometry,
    label: impl Into<String>,
) -> Result<EventStream> {
    let mut prev = 0u64;
    for (index, e) in events.iter().enumerate() {
        if !geometry.contains(e.x, e.y) {
            return Err(Error::OutOfBoundsPixel {
                index,
                x: e.x,
                y: e.y,
                width: geometry.width,
                height: geometry.height,
            });
        }
        if index > 0 && e.t < prev {
            return Err(Error::OutOfOrderTimestamps {
                index,
                t: e.t,
                prev,
            });
        }
        prev = e.t;
    }
    Ok(EventStream {
        events,
        geometry,
        label: label.into(),
    })
}

impl EventStream {
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn geometry(&self) -> SensorGeometry {
        self.geometry
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn first_timestamp(&self) -> Option<u64> {
        self.events.first().map(|e| e.t)
    }

    pub fn last_timestamp(&self) -> Option<u64> {
        self.events.last().map(|e| e.t)
    }

    /// Index of the first event with `t >= timestamp`.
    pub fn lower_bound(&self, timestamp: u64) -> usize {
        self.events.partition_point(|e| e.t < timestamp)
    }

    /// Span between the first and last event.
    pub fn duration(&self) -> Result<u64> {
        match (self.first_timestamp(), self.last_timestamp()) {
            (Some(first), Some(last)) => Ok(last - first),
            _ => Err(Error::EmptyStream),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }
}

/// Free-function form of [`EventStream::duration`].
pub fn duration(stream: &EventStream) -> Result<u64> {
    stream.duration()
}
