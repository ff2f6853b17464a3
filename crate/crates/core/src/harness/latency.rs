use std::time::Instant;

use super::metrics::LatencyStats;
use crate::assess::{assess_event, HandwashEvent};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::signal::SignalConfig;

fn time_event(
    params: &ModelParams,
    event: &HandwashEvent,
    cfg: &SignalConfig,
    min_windows: usize,
) -> Result<f64> {
    let start = Instant::now();
    let out = assess_event(params, event, cfg, min_windows)?;
    let elapsed = start.elapsed().as_secs_f64();
    std::hint::black_box(out);
    Ok(elapsed)
}

/// End-to-end seconds per event (features, every window, report). One
/// untimed warm-up pass over the events runs first.
pub fn measure_latency(
    params: &ModelParams,
    events: &[HandwashEvent],
    cfg: &SignalConfig,
    min_windows: usize,
    repeats: usize,
) -> Result<LatencyStats> {
    if repeats == 0 || events.is_empty() {
        return Err(Error::InvalidArgument(
            "latency needs at least one repeat and one event".into(),
        ));
    }
    for e in events {
        time_event(params, e, cfg, min_windows)?;
    }
    let mut samples = Vec::with_capacity(repeats * events.len());
    for _ in 0..repeats {
        for e in events {
            samples.push(time_event(params, e, cfg, min_windows)?);
        }
    }
    LatencyStats::from_samples(&samples)
}

/// Interleaved measurement of two models on the same events; the model that
/// goes first alternates between repeats.
pub fn paired_latency(
    a: &ModelParams,
    b: &ModelParams,
    events: &[HandwashEvent],
    cfg: &SignalConfig,
    min_windows: usize,
    repeats: usize,
) -> Result<(LatencyStats, LatencyStats)> {
    if repeats == 0 || events.is_empty() {
        return Err(Error::InvalidArgument(
            "latency needs at least one repeat and one event".into(),
        ));
    }
    for e in events {
        time_event(a, e, cfg, min_windows)?;
        time_event(b, e, cfg, min_windows)?;
    }
    let (mut sa, mut sb) = (Vec::new(), Vec::new());
    for r in 0..repeats {
        for e in events {
            if r % 2 == 0 {
                sa.push(time_event(a, e, cfg, min_windows)?);
                sb.push(time_event(b, e, cfg, min_windows)?);
            } else {
                sb.push(time_event(b, e, cfg, min_windows)?);
                sa.push(time_event(a, e, cfg, min_windows)?);
            }
        }
    }
    Ok((
        LatencyStats::from_samples(&sa)?,
        LatencyStats::from_samples(&sb)?,
    ))
}

/// Event spanning a whole series: from its first timestamp to one sample
/// past its last.
pub fn event_from_series(series: crate::signal::SampleSeries) -> Result<HandwashEvent> {
    let first = series.samples().first().ok_or(Error::EmptyInput)?.t_ns;
    let last = series.samples().last().ok_or(Error::EmptyInput)?.t_ns;
    let end = last + (1e9 / series.rate_hz()).round() as i64;
    HandwashEvent::new(series, first, end)
}
