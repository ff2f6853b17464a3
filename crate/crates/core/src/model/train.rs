use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{gradients, segment_gradients, CarryState, LabeledSequence};
use super::params::ModelParams;
use super::spec::ModelSpec;
use crate::error::{Error, Result};
use crate::optim::Adam;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Sequences per optimizer step.
    pub batch_sequences: usize,
    /// Global gradient-norm clip; 0 disables.
    pub clip_norm: f64,
    /// Truncated backpropagation length in windows; 0 backpropagates
    /// through whole sequences. The recurrent state is still carried across
    /// truncation points.
    pub chunk_windows: usize,
    /// Learning rate of the last epoch as a fraction of `lr`, reached by
    /// linear per-epoch decay.
    pub final_lr_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            epochs: 20,
            seed: 0,
            batch_sequences: 1,
            clip_norm: 5.0,
            chunk_windows: 0,
            final_lr_fraction: 1.0,
        }
    }
}

/// Per-feature mean and inverse std over every window in the dataset,
/// rounded to f32.
fn fit_normalization(params: &mut ModelParams, data: &[LabeledSequence]) {
    let dim = params.spec.feature_dim;
    let mut sum = vec![0.0; dim];
    let mut sq = vec![0.0; dim];
    let mut n = 0.0;
    for f in data.iter().flat_map(|s| &s.features) {
        for (i, v) in f.iter().enumerate() {
            sum[i] += v;
            sq[i] += v * v;
        }
        n += 1.0;
    }
    if n == 0.0 {
        return;
    }
    for i in 0..dim {
        let mean = sum[i] / n;
        let var = (sq[i] / n - mean * mean).max(0.0);
        let std = var.sqrt();
        params.norm_mean.data[i] = (mean as f32) as f64;
        params.norm_scale.data[i] = if std > 1e-8 {
            ((1.0 / std) as f32) as f64
        } else {
            1.0
        };
    }
}

fn check_dataset(spec: &ModelSpec, data: &[LabeledSequence]) -> Result<()> {
    let mut seen = vec![false; spec.num_classes];
    for s in data {
        if s.features.len() != s.labels.len() {
            return Err(Error::InvalidArgument(
                "features and labels are not aligned".into(),
            ));
        }
        for l in s.labels.iter().flatten() {
            if *l >= spec.num_classes {
                return Err(Error::InvalidArgument(format!(
                    "label {l} outside {} classes",
                    spec.num_classes
                )));
            }
            seen[*l] = true;
        }
    }
    let classes = seen.iter().filter(|&&s| s).count();
    if classes < 2 {
        return Err(Error::DegenerateDataset(format!(
            "{classes} distinct class(es) present, need at least 2"
        )));
    }
    Ok(())
}

/// Initialize from `cfg.seed`, fit the input standardization and train with
/// Adam on mean cross-entropy. Deterministic given the seed.
pub fn train(spec: &ModelSpec, data: &[LabeledSequence], cfg: &TrainConfig) -> Result<ModelParams> {
    check_dataset(spec, data)?;
    let mut params = ModelParams::init(spec, cfg.seed)?;
    fit_normalization(&mut params, data);
    train_from(params, data, cfg)
}

fn apply(params: &mut ModelParams, opt: &mut Adam, mut grad: ModelParams, clip_norm: f64) {
    if clip_norm > 0.0 {
        let norm = grad
            .named_trainable()
            .iter()
            .map(|(_, t)| t.data.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt();
        if norm > clip_norm {
            let s = clip_norm / norm;
            for t in grad.trainable_mut() {
                t.data.iter_mut().for_each(|v| *v *= s);
            }
        }
    }
    let grads: Vec<&_> = grad.named_trainable().into_iter().map(|(_, t)| t).collect();
    opt.step(params.trainable_mut(), grads);
}

/// Continue training existing parameters (normalization is kept).
pub fn train_from(
    mut params: ModelParams,
    data: &[LabeledSequence],
    cfg: &TrainConfig,
) -> Result<ModelParams> {
    if cfg.epochs == 0 {
        return Ok(params);
    }
    check_dataset(&params.spec, data)?;
    if !(cfg.final_lr_fraction >= 0.0 && cfg.final_lr_fraction.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "final_lr_fraction {} must be finite and >= 0",
            cfg.final_lr_fraction
        )));
    }
    let mut opt = Adam::new(cfg.lr).rounding_to_f32();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0f_7a1e);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let batch = cfg.batch_sequences.max(1);
    for epoch in 0..cfg.epochs {
        let progress = if cfg.epochs > 1 {
            epoch as f64 / (cfg.epochs - 1) as f64
        } else {
            0.0
        };
        opt.lr = cfg.lr * (1.0 + (cfg.final_lr_fraction - 1.0) * progress);
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let seqs: Vec<&LabeledSequence> = chunk.iter().map(|&i| &data[i]).collect();
            if cfg.chunk_windows == 0 {
                if seqs.iter().all(|s| s.labels.iter().all(Option::is_none)) {
                    continue;
                }
                let owned: Vec<LabeledSequence> = seqs.iter().map(|s| (*s).clone()).collect();
                let (_, grad) = gradients(&params, &owned)?;
                apply(&mut params, &mut opt, grad, cfg.clip_norm);
            } else {
                let mut states: Vec<CarryState> =
                    seqs.iter().map(|_| CarryState::initial(&params)).collect();
                let longest = seqs.iter().map(|s| s.features.len()).max().unwrap_or(0);
                let mut at = 0;
                while at < longest {
                    let mut grad = params.zeros_like();
                    let mut count = 0;
                    for (s, state) in seqs.iter().zip(states.iter_mut()) {
                        if at >= s.features.len() {
                            continue;
                        }
                        let end = (at + cfg.chunk_windows).min(s.features.len());
                        let (_, n, next) = segment_gradients(
                            &params,
                            &s.features[at..end],
                            &s.labels[at..end],
                            state.clone(),
                            &mut grad,
                        )?;
                        *state = next;
                        count += n;
                    }
                    at += cfg.chunk_windows;
                    if count == 0 {
                        continue;
                    }
                    let inv = 1.0 / count as f64;
                    for t in grad.trainable_mut() {
                        t.data.iter_mut().for_each(|v| *v *= inv);
                    }
                    apply(&mut params, &mut opt, grad, cfg.clip_norm);
                }
            }
        }
        if !params.is_finite() {
            return Err(Error::NumericOverflow("training".into()));
        }
    }
    Ok(params)
}
