use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// accel xyz, gyro xyz, mag xyz.
pub const NUM_CHANNELS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t_ns: i64,
    /// m/s²
    pub accel: [f64; 3],
    /// rad/s
    pub gyro: [f64; 3],
    /// µT
    pub mag: [f64; 3],
}

impl Sample {
    pub fn from_channels(t_ns: i64, ch: [f64; NUM_CHANNELS]) -> Self {
        Self {
            t_ns,
            accel: [ch[0], ch[1], ch[2]],
            gyro: [ch[3], ch[4], ch[5]],
            mag: [ch[6], ch[7], ch[8]],
        }
    }

    pub fn channels(&self) -> [f64; NUM_CHANNELS] {
        let [ax, ay, az] = self.accel;
        let [gx, gy, gz] = self.gyro;
        let [mx, my, mz] = self.mag;
        [ax, ay, az, gx, gy, gz, mx, my, mz]
    }
}

/// A timestamped 9-axis IMU stream with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSeries {
    samples: Vec<Sample>,
    rate_hz: f64,
}

impl SampleSeries {
    pub fn new(samples: Vec<Sample>, rate_hz: f64) -> Result<Self> {
        if !(rate_hz > 0.0 && rate_hz.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "rate must be positive, got {rate_hz}"
            )));
        }
        for pair in samples.windows(2) {
            if pair[1].t_ns <= pair[0].t_ns {
                return Err(Error::InvalidSeries(format!(
                    "timestamps not strictly increasing at {}",
                    pair[1].t_ns
                )));
            }
        }
        Ok(Self { samples, rate_hz })
    }

    /// Builds a series with timestamps spaced at `1/rate_hz` starting at `t0_ns`.
    pub fn from_rows(t0_ns: i64, rate_hz: f64, rows: &[[f64; NUM_CHANNELS]]) -> Result<Self> {
        let dt = 1e9 / rate_hz;
        let samples = rows
            .iter()
            .enumerate()
            .map(|(i, r)| Sample::from_channels(t0_ns + (i as f64 * dt).round() as i64, *r))
            .collect();
        Self::new(samples, rate_hz)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Column view of one channel.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.channels()[c]).collect()
    }

    pub(crate) fn with_samples(&self, samples: Vec<Sample>) -> Self {
        Self {
            samples,
            rate_hz: self.rate_hz,
        }
    }
}

/// A series with one ground-truth label per sample (0 = no step, 1..=10 steps).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSeries {
    pub series: SampleSeries,
    pub labels: Vec<u8>,
}

impl LabeledSeries {
    pub fn new(series: SampleSeries, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != series.len() {
            return Err(Error::InvalidSeries(format!(
                "{} labels for {} samples",
                labels.len(),
                series.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 10) {
            return Err(Error::InvalidSeries(format!("label {bad} outside 0..=10")));
        }
        Ok(Self { series, labels })
    }

    /// Majority label over `[start, start + len)`; ties go to the smaller label.
    pub fn window_label(&self, start: usize, len: usize) -> u8 {
        let mut counts = [0usize; 11];
        for &l in &self.labels[start..start + len] {
            counts[l as usize] += 1;
        }
        let mut best = 0;
        for l in 1..11 {
            if counts[l] > counts[best] {
                best = l;
            }
        }
        best as u8
    }
}
