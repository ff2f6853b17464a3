use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::HarnessConfig;
use super::metrics::{mean_present, step_accuracy, LatencyStats, StepAccuracy, LABELS};
use super::synth::Dataset;
use crate::assess::step_of_class;
use crate::error::{Error, Result};
use crate::model::{count_flops, predict_sequence, train, LabeledSequence, ModelParams};
use crate::signal::{LabeledSeries, SignalConfig};

/// A session after featurization: one training sequence plus the window
/// ground truth as step numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSession {
    pub participant: usize,
    pub session: usize,
    pub sequence: LabeledSequence,
    pub truth: Vec<u8>,
}

/// Window features and majority labels. Label 0 windows are unlabeled unless
/// the null class is enabled.
pub fn featurize(
    data: &LabeledSeries,
    cfg: &SignalConfig,
    null_class: bool,
) -> Result<(LabeledSequence, Vec<u8>)> {
    let (windows, feats) = cfg.extract(&data.series)?;
    let truth: Vec<u8> = windows
        .iter()
        .map(|w| data.window_label(w.start_index, w.length_samples))
        .collect();
    let labels = truth
        .iter()
        .map(|&t| match t {
            0 if null_class => Some(10),
            0 => None,
            k => Some(usize::from(k) - 1),
        })
        .collect();
    let features = feats.into_iter().map(|f| f.values).collect();
    Ok((LabeledSequence { features, labels }, truth))
}

pub fn prepare(dataset: &Dataset, cfg: &HarnessConfig) -> Result<Vec<PreparedSession>> {
    dataset
        .sessions
        .iter()
        .map(|s| {
            let (sequence, truth) = featurize(&s.data, &cfg.signal, cfg.model.null_class)?;
            Ok(PreparedSession {
                participant: s.participant,
                session: s.session,
                sequence,
                truth,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub name: String,
    /// Indices into the prepared sessions.
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub name: String,
    pub accuracy: StepAccuracy,
    pub latency: Option<LatencyStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub folds: Vec<FoldReport>,
    /// Fold average per step; `None` when no fold saw the step.
    pub per_step: Vec<Option<f64>>,
    /// Mean of `per_step` over present steps.
    pub mean_accuracy: f64,
    /// Fold average of window accuracy.
    pub window_accuracy: f64,
    /// Summed over folds.
    pub confusion: Vec<Vec<usize>>,
    pub latency: Option<LatencyStats>,
    pub flops: u64,
}

impl EvalReport {
    /// Average fold reports in fold order.
    pub fn from_folds(folds: Vec<FoldReport>, flops: u64, latency_samples: &[f64]) -> Self {
        let per_step = (0..LABELS - 1)
            .map(|k| {
                let v: Vec<f64> = folds
                    .iter()
                    .filter_map(|f| f.accuracy.per_step[k])
                    .collect();
                (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
            })
            .collect::<Vec<_>>();
        let mut confusion = vec![vec![0usize; LABELS]; LABELS];
        for f in &folds {
            for (row, frow) in confusion.iter_mut().zip(&f.accuracy.confusion) {
                for (c, v) in row.iter_mut().zip(frow) {
                    *c += v;
                }
            }
        }
        let window_accuracy = if folds.is_empty() {
            0.0
        } else {
            folds
                .iter()
                .map(|f| f.accuracy.window_accuracy())
                .sum::<f64>()
                / folds.len() as f64
        };
        Self {
            mean_accuracy: mean_present(&per_step),
            per_step,
            window_accuracy,
            confusion,
            latency: LatencyStats::from_samples(latency_samples).ok(),
            flops,
            folds,
        }
    }
}

/// Each participant held out once, trained on everyone else.
pub fn lopo_folds(sessions: &[PreparedSession]) -> Result<Vec<Fold>> {
    let mut participants: Vec<usize> = sessions.iter().map(|s| s.participant).collect();
    participants.sort_unstable();
    participants.dedup();
    if participants.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "leave-one-participant-out needs at least 2 participants, found {}",
            participants.len()
        )));
    }
    Ok(participants
        .iter()
        .map(|&p| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..sessions.len()).partition(|&i| sessions[i].participant == p);
            Fold {
                name: format!("p{p:02}"),
                train,
                test,
            }
        })
        .collect())
}

/// Per participant, one seeded session held out and the rest used for
/// training.
pub fn user_dependent_folds(sessions: &[PreparedSession], seed: u64) -> Result<Vec<Fold>> {
    let mut participants: Vec<usize> = sessions.iter().map(|s| s.participant).collect();
    participants.sort_unstable();
    participants.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    participants
        .iter()
        .map(|&p| {
            let own: Vec<usize> = (0..sessions.len())
                .filter(|&i| sessions[i].participant == p)
                .collect();
            if own.len() < 2 {
                return Err(Error::InvalidArgument(format!(
                    "participant {p} has fewer than 2 sessions"
                )));
            }
            let held = own[rng.gen_range(0..own.len())];
            Ok(Fold {
                name: format!("p{p:02}"),
                train: own.iter().copied().filter(|&i| i != held).collect(),
                test: vec![held],
            })
        })
        .collect()
}

/// Predicted step numbers for each window of a session.
pub fn predict_steps(params: &ModelParams, s: &PreparedSession) -> Result<Vec<u8>> {
    Ok(predict_sequence(params, &s.sequence.features)?
        .iter()
        .map(|p| step_of_class(p.argmax()))
        .collect())
}

/// Evaluate trained params on sessions; also returns per-session inference
/// wall-clock seconds.
pub fn test_on(
    params: &ModelParams,
    sessions: &[&PreparedSession],
) -> Result<(StepAccuracy, Vec<f64>)> {
    let mut pred = Vec::new();
    let mut truth = Vec::new();
    let mut times = Vec::new();
    for s in sessions {
        let start = Instant::now();
        let p = predict_steps(params, s)?;
        times.push(start.elapsed().as_secs_f64());
        pred.extend(p);
        truth.extend_from_slice(&s.truth);
    }
    Ok((step_accuracy(&pred, &truth)?, times))
}

pub fn train_on(sessions: &[&PreparedSession], cfg: &HarnessConfig) -> Result<ModelParams> {
    let data: Vec<LabeledSequence> = sessions.iter().map(|s| s.sequence.clone()).collect();
    train(&cfg.model_spec()?, &data, &cfg.train)
}

pub fn run_folds(
    sessions: &[PreparedSession],
    folds: &[Fold],
    cfg: &HarnessConfig,
) -> Result<EvalReport> {
    let mut reports = Vec::with_capacity(folds.len());
    let mut all_times = Vec::new();
    for fold in folds {
        let train_set: Vec<&PreparedSession> = fold.train.iter().map(|&i| &sessions[i]).collect();
        let test_set: Vec<&PreparedSession> = fold.test.iter().map(|&i| &sessions[i]).collect();
        let params = train_on(&train_set, cfg)?;
        let (accuracy, times) = test_on(&params, &test_set)?;
        reports.push(FoldReport {
            name: fold.name.clone(),
            accuracy,
            latency: LatencyStats::from_samples(&times).ok(),
        });
        all_times.extend(times);
    }
    Ok(EvalReport::from_folds(
        reports,
        count_flops(&cfg.model_spec()?).total,
        &all_times,
    ))
}

pub fn lopo(dataset: &Dataset, cfg: &HarnessConfig) -> Result<EvalReport> {
    let sessions = prepare(dataset, cfg)?;
    run_folds(&sessions, &lopo_folds(&sessions)?, cfg)
}

pub fn user_dependent_eval(dataset: &Dataset, cfg: &HarnessConfig) -> Result<EvalReport> {
    let sessions = prepare(dataset, cfg)?;
    run_folds(
        &sessions,
        &user_dependent_folds(&sessions, cfg.train.seed)?,
        cfg,
    )
}
