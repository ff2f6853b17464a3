use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Labels 0 (no step) to 10.
pub const LABELS: usize = 11;

/// Per-step window accuracy: correct windows of a step over its support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepAccuracy {
    /// Index `step - 1`; `None` when the step never occurs in the truth.
    pub per_step: Vec<Option<f64>>,
    pub support: Vec<usize>,
    pub correct: Vec<usize>,
    /// `confusion[truth][predicted]` over labels 0..=10.
    pub confusion: Vec<Vec<usize>>,
}

impl StepAccuracy {
    /// Mean over steps that occur.
    pub fn mean(&self) -> f64 {
        mean_present(&self.per_step)
    }

    /// Fraction of all step windows classified correctly.
    pub fn window_accuracy(&self) -> f64 {
        let support: usize = self.support.iter().sum();
        if support == 0 {
            return 0.0;
        }
        self.correct.iter().sum::<usize>() as f64 / support as f64
    }
}

pub(crate) fn mean_present(values: &[Option<f64>]) -> f64 {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    if present.is_empty() {
        0.0
    } else {
        present.iter().sum::<f64>() / present.len() as f64
    }
}

/// Windows whose true label is 0 count toward the confusion matrix only.
pub fn step_accuracy(predicted: &[u8], truth: &[u8]) -> Result<StepAccuracy> {
    if predicted.len() != truth.len() {
        return Err(Error::ShapeMismatch {
            layer: "step_accuracy".into(),
            expected: format!("{}", truth.len()),
            actual: format!("{}", predicted.len()),
        });
    }
    let mut confusion = vec![vec![0usize; LABELS]; LABELS];
    for (&p, &t) in predicted.iter().zip(truth) {
        if usize::from(p) >= LABELS || usize::from(t) >= LABELS {
            return Err(Error::InvalidArgument(format!(
                "label outside 0..=10: {t} / {p}"
            )));
        }
        confusion[usize::from(t)][usize::from(p)] += 1;
    }
    let support: Vec<usize> = (1..LABELS).map(|k| confusion[k].iter().sum()).collect();
    let correct: Vec<usize> = (1..LABELS).map(|k| confusion[k][k]).collect();
    let per_step = support
        .iter()
        .zip(&correct)
        .map(|(&s, &c)| (s > 0).then(|| c as f64 / s as f64))
        .collect();
    Ok(StepAccuracy {
        per_step,
        support,
        correct,
        confusion,
    })
}

/// Median and 95th percentile (nearest rank) of a set of durations, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub median_s: f64,
    pub p95_s: f64,
    pub samples: usize,
}

pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

impl LatencyStats {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        let median = if s.len() % 2 == 1 {
            s[s.len() / 2]
        } else {
            (s[s.len() / 2 - 1] + s[s.len() / 2]) / 2.0
        };
        Ok(Self {
            median_s: median,
            p95_s: percentile(&s, 0.95),
            samples: s.len(),
        })
    }
}
