//! Sensor preprocessing: FIR smoothing, overlapping windows and per-window
//! statistical + ECDF features.

mod features;
mod filter;
mod io;
mod series;
mod window;

pub use features::{
    ecdf_features, feature_vector, stat_features, FeatureLayout, FeatureVector, STAT_COUNT,
};
pub use filter::{fir_filter, FilterSpec};
pub use io::{read_sensor_csv, write_sensor_csv, SENSOR_CSV_HEADER};
pub use series::{LabeledSeries, Sample, SampleSeries, NUM_CHANNELS};
pub use window::{make_windows, window_hop, window_length, Window};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Run-time signal configuration. Defaults are 0.06 s windows with 70%
/// overlap, five ECDF points and a 5-tap moving average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SignalConfig {
    pub window_seconds: f64,
    pub overlap: f64,
    pub ecdf_points: usize,
    pub filter_taps: usize,
}

impl Default for SignalConfig {
    fn default() -> Self {
        Self {
            window_seconds: 0.06,
            overlap: 0.7,
            ecdf_points: 5,
            filter_taps: 5,
        }
    }
}

impl SignalConfig {
    pub fn feature_dim(&self) -> usize {
        FeatureLayout::new(self.ecdf_points).len()
    }

    /// Filter, window and featurize a series. Returns the windows alongside
    /// their feature vectors (same order).
    pub fn extract(&self, series: &SampleSeries) -> Result<(Vec<Window>, Vec<FeatureVector>)> {
        let spec = FilterSpec::moving_average(self.filter_taps)?;
        let filtered = fir_filter(series, &spec)?;
        let windows = make_windows(&filtered, self.window_seconds, self.overlap)?;
        let feats = windows
            .iter()
            .map(|w| feature_vector(w, self.ecdf_points))
            .collect::<Result<Vec<_>>>()?;
        Ok((windows, feats))
    }
}
