use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{forward, CarryState, ModelParams};
use crate::signal::{SampleSeries, SignalConfig};

/// Default number of windows a step must win before it counts as performed.
pub const DEFAULT_MIN_WINDOWS: usize = 3;

/// A recorded wash: the sensor stream plus the start and end markers from the
/// voice interaction.
#[derive(Debug, Clone, PartialEq)]
pub struct HandwashEvent {
    pub series: SampleSeries,
    pub start_time_ns: i64,
    pub end_time_ns: i64,
}

impl HandwashEvent {
    pub fn new(series: SampleSeries, start_time_ns: i64, end_time_ns: i64) -> Result<Self> {
        if end_time_ns <= start_time_ns {
            return Err(Error::InvalidArgument(format!(
                "event ends at {end_time_ns} before it starts at {start_time_ns}"
            )));
        }
        Ok(Self {
            series,
            start_time_ns,
            end_time_ns,
        })
    }

    pub fn duration_s(&self) -> f64 {
        (self.end_time_ns - self.start_time_ns) as f64 / 1e9
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub window_index: usize,
    /// Step number `1..=10`, or 0 when the optional null class wins.
    pub step: u8,
    pub probability: f64,
}

pub type StepTimeline = Vec<TimelineEntry>;

/// Step number for a class index.
pub fn step_of_class(class: usize) -> u8 {
    if class < 10 {
        class as u8 + 1
    } else {
        0
    }
}

/// Featurize the event and classify its windows in order, threading the
/// recurrent state from window to window.
pub fn classify_event(
    params: &ModelParams,
    event: &HandwashEvent,
    cfg: &SignalConfig,
) -> Result<StepTimeline> {
    if event.series.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (_, feats) = cfg.extract(&event.series)?;
    let mut state = CarryState::initial(params);
    let mut out = Vec::with_capacity(feats.len());
    for (i, f) in feats.iter().enumerate() {
        let (probs, next) = forward(params, &f.values, &state)?;
        let class = probs.argmax();
        out.push(TimelineEntry {
            window_index: i,
            step: step_of_class(class),
            probability: probs.probs[class],
        });
        state = next;
    }
    Ok(out)
}

/// Steps predicted for at least `min_windows` windows.
pub fn detect_steps(timeline: &[TimelineEntry], min_windows: usize) -> Result<BTreeSet<u8>> {
    if min_windows == 0 {
        return Err(Error::InvalidArgument(
            "min_windows must be at least 1".into(),
        ));
    }
    let mut counts = [0usize; 11];
    for e in timeline {
        counts[usize::from(e.step.min(10))] += 1;
    }
    Ok((1..=10u8)
        .filter(|&s| counts[usize::from(s)] >= min_windows)
        .collect())
}
