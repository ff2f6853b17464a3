use serde::{Deserialize, Serialize};

use super::config::HarnessConfig;
use super::eval::{lopo_folds, prepare, test_on, train_on, PreparedSession};
use super::synth::Dataset;
use crate::compress::{finalize, search, CompressionBudget, SearchResult};
use crate::error::{Error, Result};
use crate::model::{count_flops, LabeledSequence, ModelParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    /// Fold average of window accuracy.
    pub accuracy: f64,
    pub mean_flops: f64,
    pub max_flops: u64,
    /// Smallest per-fold budget, `alpha` times the baseline count.
    pub budget_flops: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub baseline_accuracy: f64,
    pub baseline_flops: u64,
    pub rows: Vec<SweepRow>,
}

/// Search a budget for `params`, then prune (and optionally fine-tune) to
/// the best candidate.
pub fn compress_model(
    params: &ModelParams,
    train: &[LabeledSequence],
    val: &[LabeledSequence],
    alpha: f64,
    cfg: &HarnessConfig,
) -> Result<(ModelParams, SearchResult)> {
    let budget = CompressionBudget::new(alpha, count_flops(&params.spec).total)?;
    let found = search(params, val, &budget, &cfg.search)?;
    let model = finalize(
        params,
        &found.sparsity,
        &budget,
        train,
        cfg.compress.fine_tune_epochs,
        &cfg.train,
    )?;
    Ok((model, found))
}

/// Each participant's highest-numbered session is set aside as the search's
/// validation batch; the rest are for training.
pub fn split_validation<'a>(
    sessions: &[&'a PreparedSession],
) -> (Vec<&'a PreparedSession>, Vec<&'a PreparedSession>) {
    let last = |p: usize| {
        sessions
            .iter()
            .filter(|s| s.participant == p)
            .map(|s| s.session)
            .max()
    };
    sessions.iter().copied().partition(|s| {
        Some(s.session) != last(s.participant)
            || sessions
                .iter()
                .filter(|o| o.participant == s.participant)
                .count()
                < 2
    })
}

fn sequences(sessions: &[&PreparedSession]) -> Vec<LabeledSequence> {
    sessions.iter().map(|s| s.sequence.clone()).collect()
}

/// Leave-one-participant-out: per fold, train once, then compress and test
/// at every `alpha`.
pub fn alpha_sweep(dataset: &Dataset, alphas: &[f64], cfg: &HarnessConfig) -> Result<SweepReport> {
    if alphas.is_empty()
        || alphas.windows(2).any(|w| w[0] >= w[1])
        || alphas.iter().any(|&a| !(a > 0.0 && a < 1.0))
    {
        return Err(Error::InvalidArgument(
            "alphas must be strictly ascending within (0, 1)".into(),
        ));
    }
    let sessions = prepare(dataset, cfg)?;
    let folds = lopo_folds(&sessions)?;
    let mut baseline_acc = 0.0;
    let mut acc = vec![0.0; alphas.len()];
    let mut flops: Vec<Vec<u64>> = vec![Vec::new(); alphas.len()];
    let mut budgets = vec![f64::INFINITY; alphas.len()];
    let baseline_flops = count_flops(&cfg.model_spec()?).total;
    for fold in &folds {
        let pool: Vec<&PreparedSession> = fold.train.iter().map(|&i| &sessions[i]).collect();
        let test: Vec<&PreparedSession> = fold.test.iter().map(|&i| &sessions[i]).collect();
        let (train_set, val_set) = split_validation(&pool);
        let params = train_on(&train_set, cfg)?;
        baseline_acc += test_on(&params, &test)?.0.window_accuracy();
        let (train_seqs, val_seqs) = (sequences(&train_set), sequences(&val_set));
        for (k, &alpha) in alphas.iter().enumerate() {
            let (model, found) = compress_model(&params, &train_seqs, &val_seqs, alpha, cfg)?;
            acc[k] += test_on(&model, &test)?.0.window_accuracy();
            flops[k].push(found.flops);
            budgets[k] = budgets[k].min(alpha * baseline_flops as f64);
        }
    }
    let n = folds.len() as f64;
    Ok(SweepReport {
        baseline_accuracy: baseline_acc / n,
        baseline_flops,
        rows: alphas
            .iter()
            .enumerate()
            .map(|(k, &alpha)| SweepRow {
                alpha,
                accuracy: acc[k] / n,
                mean_flops: flops[k].iter().sum::<u64>() as f64 / n,
                max_flops: flops[k].iter().copied().max().unwrap_or(0),
                budget_flops: budgets[k],
            })
            .collect(),
    })
}
