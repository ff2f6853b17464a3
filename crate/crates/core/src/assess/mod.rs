//! Wash quality assessment: per-window step classification over an event,
//! step presence, and the spoken feedback.

mod feedback;
mod report;
mod timeline;

pub use feedback::{
    all_messages, missed_step_message, MESSAGE_SEPARATOR, MISSED_STEP_MESSAGES, PERFECT_MESSAGE,
    SHORT_DURATION_MESSAGE,
};
pub use report::{build_report, QualityReport, MIN_DURATION_S, NUM_STEPS};
pub use timeline::{
    classify_event, detect_steps, step_of_class, HandwashEvent, StepTimeline, TimelineEntry,
    DEFAULT_MIN_WINDOWS,
};

use crate::error::Result;
use crate::model::ModelParams;
use crate::signal::SignalConfig;

/// Classify, aggregate and report in one call.
pub fn assess_event(
    params: &ModelParams,
    event: &HandwashEvent,
    cfg: &SignalConfig,
    min_windows: usize,
) -> Result<(StepTimeline, QualityReport)> {
    let timeline = classify_event(params, event, cfg)?;
    let performed = detect_steps(&timeline, min_windows)?;
    let report = build_report(&performed, event.duration_s())?;
    Ok((timeline, report))
}
