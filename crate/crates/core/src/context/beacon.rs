use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeaconReading {
    pub t_ns: i64,
    pub beacon_id: String,
    /// dB, within `[-120, 0]`.
    pub rssi: f64,
}

impl BeaconReading {
    pub fn new(t_ns: i64, beacon_id: impl Into<String>, rssi: f64) -> Result<Self> {
        if !(-120.0..=0.0).contains(&rssi) {
            return Err(Error::InvalidArgument(format!(
                "rssi {rssi} dB outside [-120, 0]"
            )));
        }
        Ok(Self {
            t_ns,
            beacon_id: beacon_id.into(),
            rssi,
        })
    }
}

/// Readings no older than `span_ns` relative to the newest one.
#[derive(Debug, Clone, PartialEq)]
pub struct RssiWindow {
    span_ns: i64,
    readings: VecDeque<BeaconReading>,
}

impl RssiWindow {
    pub fn new(span_ns: i64) -> Self {
        Self {
            span_ns,
            readings: VecDeque::new(),
        }
    }

    pub fn ingest(&mut self, reading: BeaconReading) -> Result<()> {
        if let Some(last) = self.readings.back() {
            if reading.t_ns < last.t_ns {
                return Err(Error::NonMonotonicClock {
                    now: reading.t_ns,
                    last: last.t_ns,
                });
            }
        }
        let now = reading.t_ns;
        self.readings.push_back(reading);
        self.evict(now);
        Ok(())
    }

    pub fn evict(&mut self, now: i64) {
        while self
            .readings
            .front()
            .is_some_and(|r| now - r.t_ns > self.span_ns)
        {
            self.readings.pop_front();
        }
    }

    pub fn len(&self) -> usize {
        self.readings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.readings.is_empty()
    }

    pub fn readings(&self) -> impl Iterator<Item = &BeaconReading> {
        self.readings.iter()
    }

    /// Mean RSSI of the readings aged at most the span at `now` is above
    /// `threshold`, every one of them comes from `door_id`, and there is at
    /// least one.
    pub fn entry_detected(&self, now: i64, door_id: &str, threshold: f64) -> bool {
        let live: Vec<&BeaconReading> = self
            .readings
            .iter()
            .filter(|r| now - r.t_ns <= self.span_ns)
            .collect();
        if live.is_empty() || live.iter().any(|r| r.beacon_id != door_id) {
            return false;
        }
        let mean = live.iter().map(|r| r.rssi).sum::<f64>() / live.len() as f64;
        mean > threshold
    }
}
