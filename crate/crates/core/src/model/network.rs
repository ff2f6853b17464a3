use super::layers::{AttentionCache, LstmCache, SeCache};
use super::params::ModelParams;
use super::tensor::{softmax, FeatureMap};
use crate::error::{shape_err, Error, Result};

/// Concatenated CNN and RNN branch outputs of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationVector {
    pub values: Vec<f64>,
}

impl ActivationVector {
    pub fn zeros(dim: usize) -> Self {
        Self {
            values: vec![0.0; dim],
        }
    }
}

/// Everything one window hands to the next: the activation vector (whose RNN
/// part doubles as the LSTM hidden state) and the LSTM cell state. Both reset
/// to zero at the start of every event.
#[derive(Debug, Clone, PartialEq)]
pub struct CarryState {
    pub activation: ActivationVector,
    pub cell: Vec<f64>,
}

impl CarryState {
    pub fn initial(params: &ModelParams) -> Self {
        Self {
            activation: ActivationVector::zeros(params.spec.activation_dim()),
            cell: vec![0.0; params.spec.lstm_cells],
        }
    }
}

/// Class distribution for one window.
#[derive(Debug, Clone, PartialEq)]
pub struct StepProbs {
    pub probs: Vec<f64>,
}

impl StepProbs {
    /// Index of the most probable class; ties resolve to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }
}

/// A training sequence: one handwashing event, windows in order. Windows with
/// no label still advance the recurrence but add no loss.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSequence {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<Option<usize>>,
}

pub(crate) struct WindowCache {
    x: Vec<f64>,
    conv_outs: Vec<FeatureMap>,
    se_out: FeatureMap,
    se_cache: SeCache,
    att_out: Vec<f64>,
    att_cache: AttentionCache,
    lstm_cache: LstmCache,
    hidden: Vec<Vec<f64>>,
    pub(crate) probs: Vec<f64>,
    pub(crate) carry: CarryState,
}

fn finite(layer: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NumericOverflow(layer.to_string()))
    }
}

pub(crate) fn forward_cached(
    params: &ModelParams,
    features: &[f64],
    prev: &CarryState,
) -> Result<WindowCache> {
    let spec = &params.spec;
    if features.len() != spec.feature_dim {
        return Err(shape_err(
            "input features",
            [spec.feature_dim],
            [features.len()],
        ));
    }
    if prev.activation.values.len() != spec.activation_dim() || prev.cell.len() != spec.lstm_cells {
        return Err(shape_err(
            "carried state",
            [spec.activation_dim(), spec.lstm_cells],
            [prev.activation.values.len(), prev.cell.len()],
        ));
    }
    let mut x = Vec::with_capacity(spec.input_dim());
    x.extend(
        features
            .iter()
            .zip(&params.norm_mean.data)
            .zip(&params.norm_scale.data)
            .map(|((f, m), s)| (f - m) * s),
    );
    x.extend_from_slice(&prev.activation.values);
    finite("input", &x)?;
    let len = x.len();

    // CNN branch
    let mut conv_outs: Vec<FeatureMap> = Vec::with_capacity(params.convs.len());
    for (i, conv) in params.convs.iter().enumerate() {
        let out = match conv_outs.last() {
            Some(prev) => conv.forward(prev)?,
            None => conv.forward(&FeatureMap::from_vec(1, len, x.clone()))?,
        };
        finite(&format!("conv{i}"), &out.data)?;
        conv_outs.push(out);
    }
    let (se_out, se_cache) = params
        .se
        .forward(conv_outs.last().expect("at least one conv"))?;
    finite("squeeze_excite", &se_out.data)?;
    let pooled: Vec<f64> = (0..se_out.channels)
        .map(|c| se_out.channel(c).iter().sum::<f64>() / len as f64)
        .collect();

    // RNN branch
    let (att_out, att_cache) = params.attention.forward(&x, len)?;
    finite("self_attention", &att_out)?;
    let cnn = spec.cnn_out_dim();
    let h0 = &prev.activation.values[cnn..];
    let lstm_cache = params
        .lstm
        .forward_sequence(&att_out, len, h0, &prev.cell)?;
    let h_last = lstm_cache.hs.last().expect("non-empty");
    let c_last = lstm_cache.cs.last().expect("non-empty").clone();
    finite("lstm", h_last)?;
    finite("lstm", &c_last)?;

    let mut activation = pooled;
    activation.extend_from_slice(h_last);

    // Dense head
    let mut hidden: Vec<Vec<f64>> = Vec::with_capacity(params.dense.len());
    let mut cur = activation.clone();
    let last = params.dense.len() - 1;
    for (i, d) in params.dense.iter().enumerate() {
        let mut y = d.forward(&cur)?;
        if i < last {
            y.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        finite(&format!("dense{i}"), &y)?;
        hidden.push(y.clone());
        cur = y;
    }
    let probs = softmax(&cur);
    finite("softmax", &probs)?;

    Ok(WindowCache {
        x,
        conv_outs,
        se_out,
        se_cache,
        att_out,
        att_cache,
        lstm_cache,
        hidden,
        probs,
        carry: CarryState {
            activation: ActivationVector { values: activation },
            cell: c_last,
        },
    })
}

/// Classify one window given the state carried from the previous window.
pub fn forward(
    params: &ModelParams,
    features: &[f64],
    prev: &CarryState,
) -> Result<(StepProbs, CarryState)> {
    let cache = forward_cached(params, features, prev)?;
    Ok((StepProbs { probs: cache.probs }, cache.carry))
}

/// Fold [`forward`] over an event's windows starting from the zero state.
pub fn predict_sequence(params: &ModelParams, features: &[Vec<f64>]) -> Result<Vec<StepProbs>> {
    let mut state = CarryState::initial(params);
    let mut out = Vec::with_capacity(features.len());
    for f in features {
        let (p, next) = forward(params, f, &state)?;
        out.push(p);
        state = next;
    }
    Ok(out)
}

/// Backward through one window. `d_act`/`d_cell` carry gradient arriving from
/// later windows; `d_logits` is the loss gradient on this window's logits.
/// Returns the gradient on the previous window's carry.
fn backward_window(
    params: &ModelParams,
    cache: &WindowCache,
    mut d_act: Vec<f64>,
    d_cell: &[f64],
    d_logits: Option<&[f64]>,
    grad: &mut ModelParams,
) -> (Vec<f64>, Vec<f64>) {
    let spec = &params.spec;
    let len = cache.x.len();
    let cnn = spec.cnn_out_dim();

    if let Some(dl) = d_logits {
        let mut dy = dl.to_vec();
        for i in (0..params.dense.len()).rev() {
            let input: &[f64] = if i == 0 {
                &cache.carry.activation.values
            } else {
                &cache.hidden[i - 1]
            };
            let mut dx = params.dense[i].backward(input, &dy, &mut grad.dense[i]);
            if i > 0 {
                for (d, &h) in dx.iter_mut().zip(&cache.hidden[i - 1]) {
                    if h <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            dy = dx;
        }
        for (a, g) in d_act.iter_mut().zip(&dy) {
            *a += g;
        }
    }

    // CNN branch: pooled -> SE -> convs
    let mut d_map = FeatureMap::zeros(cache.se_out.channels, len);
    for c in 0..cache.se_out.channels {
        let g = d_act[c] / len as f64;
        d_map.channel_mut(c).fill(g);
    }
    let last_conv = cache.conv_outs.last().expect("conv");
    let mut d_map = params
        .se
        .backward(last_conv, &cache.se_cache, &d_map, &mut grad.se);
    let x_map = FeatureMap::from_vec(1, len, cache.x.clone());
    for i in (0..params.convs.len()).rev() {
        let input = if i == 0 {
            &x_map
        } else {
            &cache.conv_outs[i - 1]
        };
        d_map = params.convs[i].backward(input, &cache.conv_outs[i], &d_map, &mut grad.convs[i]);
    }
    let mut dx = d_map.data;

    // RNN branch: LSTM -> attention
    let (d_att, dh0, dc0) = params.lstm.backward_sequence(
        &cache.att_out,
        len,
        &cache.lstm_cache,
        &d_act[cnn..],
        d_cell,
        &mut grad.lstm,
    );
    let dx_att =
        params
            .attention
            .backward(&cache.x, len, &cache.att_cache, &d_att, &mut grad.attention);
    for (a, b) in dx.iter_mut().zip(&dx_att) {
        *a += b;
    }

    let mut d_prev = dx[spec.feature_dim..].to_vec();
    for (a, b) in d_prev[cnn..].iter_mut().zip(&dh0) {
        *a += b;
    }
    (d_prev, dc0)
}

/// Summed cross-entropy of one sequence; parameter gradients of
/// `scale * loss` are accumulated into `grad`. Returns (loss sum, labeled count).
pub(crate) fn sequence_loss_grad(
    params: &ModelParams,
    seq: &LabeledSequence,
    grad: Option<&mut ModelParams>,
    scale: f64,
) -> Result<(f64, usize)> {
    let (loss, count, _) = segment_loss_grad(
        params,
        &seq.features,
        &seq.labels,
        CarryState::initial(params),
        grad,
        scale,
    )?;
    Ok((loss, count))
}

/// Like [`sequence_loss_grad`] over a run of windows entered with `start`.
/// Gradients stop at `start`. Also returns the state after the last window.
fn segment_loss_grad(
    params: &ModelParams,
    features: &[Vec<f64>],
    labels: &[Option<usize>],
    start: CarryState,
    grad: Option<&mut ModelParams>,
    scale: f64,
) -> Result<(f64, usize, CarryState)> {
    let mut caches = Vec::with_capacity(features.len());
    let mut state = start;
    let mut loss = 0.0;
    let mut count = 0;
    for (f, label) in features.iter().zip(labels) {
        let c = forward_cached(params, f, &state)?;
        if let Some(y) = *label {
            if y >= params.spec.num_classes {
                return Err(Error::InvalidArgument(format!(
                    "label {y} outside {} classes",
                    params.spec.num_classes
                )));
            }
            loss -= c.probs[y].max(1e-300).ln();
            count += 1;
        }
        state = c.carry.clone();
        caches.push(c);
    }
    let Some(grad) = grad else {
        return Ok((loss, count, state));
    };
    let mut d_act = vec![0.0; params.spec.activation_dim()];
    let mut d_cell = vec![0.0; params.spec.lstm_cells];
    for (c, label) in caches.iter().zip(labels).rev() {
        let d_logits = label.map(|y| {
            let mut d: Vec<f64> = c.probs.iter().map(|p| p * scale).collect();
            d[y] -= scale;
            d
        });
        (d_act, d_cell) = backward_window(params, c, d_act, &d_cell, d_logits.as_deref(), grad);
    }
    Ok((loss, count, state))
}

/// Truncated backpropagation over one run of windows. The summed loss
/// gradient is accumulated into `grad`; returns (loss sum, labeled count,
/// state after the run).
pub fn segment_gradients(
    params: &ModelParams,
    features: &[Vec<f64>],
    labels: &[Option<usize>],
    start: CarryState,
    grad: &mut ModelParams,
) -> Result<(f64, usize, CarryState)> {
    if features.len() != labels.len() {
        return Err(Error::InvalidArgument(
            "features and labels are not aligned".into(),
        ));
    }
    segment_loss_grad(params, features, labels, start, Some(grad), 1.0)
}

fn labeled_count(batch: &[LabeledSequence]) -> usize {
    batch
        .iter()
        .map(|s| s.labels.iter().filter(|l| l.is_some()).count())
        .sum()
}

/// Mean cross-entropy over every labeled window in the batch.
pub fn loss(params: &ModelParams, batch: &[LabeledSequence]) -> Result<f64> {
    let n = labeled_count(batch);
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let mut total = 0.0;
    for s in batch {
        total += sequence_loss_grad(params, s, None, 0.0)?.0;
    }
    Ok(total / n as f64)
}

/// Gradient of the mean cross-entropy, backpropagated through the
/// window-to-window recurrence of each sequence. Returns (loss, gradient).
pub fn gradients(params: &ModelParams, batch: &[LabeledSequence]) -> Result<(f64, ModelParams)> {
    let n = labeled_count(batch);
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let mut grad = params.zeros_like();
    let scale = 1.0 / n as f64;
    let mut total = 0.0;
    for s in batch {
        total += sequence_loss_grad(params, s, Some(&mut grad), scale)?.0;
    }
    Ok((total / n as f64, grad))
}
