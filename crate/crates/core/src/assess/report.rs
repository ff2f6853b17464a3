use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::feedback::{
    missed_step_message, MESSAGE_SEPARATOR, PERFECT_MESSAGE, SHORT_DURATION_MESSAGE,
};
use crate::error::{Error, Result};

pub const NUM_STEPS: u8 = 10;

/// Minimum wash time for a good wash, seconds.
pub const MIN_DURATION_S: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub performed_steps: BTreeSet<u8>,
    /// Ascending.
    pub missed_steps: Vec<u8>,
    pub duration_s: f64,
    pub duration_ok: bool,
    pub messages: Vec<String>,
}

impl QualityReport {
    pub fn is_perfect(&self) -> bool {
        self.missed_steps.is_empty() && self.duration_ok
    }

    /// The messages as the single utterance read to the user.
    pub fn utterance(&self) -> String {
        self.messages.join(MESSAGE_SEPARATOR)
    }

    pub fn verdict(&self) -> &'static str {
        if self.is_perfect() {
            "perfect"
        } else {
            "needs_improvement"
        }
    }
}

fn join_steps(steps: impl Iterator<Item = u8>) -> String {
    steps.map(|s| s.to_string()).collect::<Vec<_>>().join(",")
}

/// One message per line, then `#`-prefixed `key: value` trailer lines.
impl fmt::Display for QualityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for m in &self.messages {
            writeln!(f, "{m}")?;
        }
        writeln!(
            f,
            "# performed: {}",
            join_steps(self.performed_steps.iter().copied())
        )?;
        writeln!(
            f,
            "# missed: {}",
            join_steps(self.missed_steps.iter().copied())
        )?;
        writeln!(f, "# duration_s: {}", self.duration_s)?;
        writeln!(f, "# duration_ok: {}", self.duration_ok)?;
        writeln!(f, "# verdict: {}", self.verdict())
    }
}

pub fn build_report(performed: &BTreeSet<u8>, duration_s: f64) -> Result<QualityReport> {
    if let Some(bad) = performed.iter().find(|&&s| s == 0 || s > NUM_STEPS) {
        return Err(Error::InvalidArgument(format!("step {bad} outside 1..=10")));
    }
    if !(duration_s >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "duration {duration_s} is negative"
        )));
    }
    let missed: Vec<u8> = (1..=NUM_STEPS).filter(|s| !performed.contains(s)).collect();
    let duration_ok = duration_s >= MIN_DURATION_S;
    let mut messages: Vec<String> = missed
        .iter()
        .filter_map(|&s| missed_step_message(s))
        .map(String::from)
        .collect();
    if !duration_ok {
        messages.push(SHORT_DURATION_MESSAGE.into());
    }
    if messages.is_empty() {
        messages.push(PERFECT_MESSAGE.into());
    }
    Ok(QualityReport {
        performed_steps: performed.clone(),
        missed_steps: missed,
        duration_s,
        duration_ok,
        messages,
    })
}
