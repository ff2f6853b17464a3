use super::series::{SampleSeries, NUM_CHANNELS};
use crate::error::{Error, Result};

/// A fixed-length slice of the (filtered) series, stored channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub start_index: usize,
    pub length_samples: usize,
    pub channels: [Vec<f64>; NUM_CHANNELS],
}

impl Window {
    /// Builds a window directly from per-channel values (all equal length).
    pub fn from_channels(start_index: usize, channels: [Vec<f64>; NUM_CHANNELS]) -> Result<Self> {
        let len = channels[0].len();
        if len == 0 || channels.iter().any(|c| c.len() != len) {
            return Err(Error::InvalidArgument(
                "window channels must share a non-zero length".into(),
            ));
        }
        Ok(Self {
            start_index,
            length_samples: len,
            channels,
        })
    }
}

pub fn window_length(window_seconds: f64, rate_hz: f64) -> Result<usize> {
    let len = (window_seconds * rate_hz).round();
    if !(len >= 1.0) || !len.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "window of {window_seconds}s at {rate_hz} Hz is shorter than one sample"
        )));
    }
    Ok(len as usize)
}

pub fn window_hop(length_samples: usize, overlap_fraction: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(Error::InvalidArgument(format!(
            "overlap must be in [0, 1), got {overlap_fraction}"
        )));
    }
    Ok(((length_samples as f64 * (1.0 - overlap_fraction)).round() as usize).max(1))
}

/// Tile the series with overlapping windows. The trailing partial window is
/// dropped; a series shorter than one window yields no windows.
pub fn make_windows(
    series: &SampleSeries,
    window_seconds: f64,
    overlap_fraction: f64,
) -> Result<Vec<Window>> {
    let len = window_length(window_seconds, series.rate_hz())?;
    let hop = window_hop(len, overlap_fraction)?;
    let rows: Vec<[f64; NUM_CHANNELS]> = series.samples().iter().map(|s| s.channels()).collect();
    let n = rows.len();
    if len > n {
        return Ok(Vec::new());
    }
    Ok((0..=n - len)
        .step_by(hop)
        .map(|start| {
            let channels =
                std::array::from_fn(|c| rows[start..start + len].iter().map(|r| r[c]).collect());
            Window {
                start_index: start,
                length_samples: len,
                channels,
            }
        })
        .collect())
}
