use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{count_flops, ModelParams, ModelSpec, Tensor};

/// The unit type removed when a layer is pruned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerKind {
    /// Filters of a convolution.
    Conv,
    /// Cells of the LSTM.
    Lstm,
    /// Units of a hidden dense layer.
    Dense,
}

impl LayerKind {
    /// Embedding code in `[0, 1]`.
    pub fn code(self) -> f64 {
        match self {
            LayerKind::Conv => 0.0,
            LayerKind::Lstm => 0.5,
            LayerKind::Dense => 1.0,
        }
    }
}

/// One prunable layer: which kind, its index among layers of that kind, and
/// its name in the FLOPs report.
#[derive(Debug, Clone, PartialEq)]
pub struct PrunableLayer {
    pub kind: LayerKind,
    pub index: usize,
    pub units: usize,
}

impl PrunableLayer {
    pub fn flops_name(&self) -> String {
        match self.kind {
            LayerKind::Conv => format!("conv{}", self.index),
            LayerKind::Lstm => "lstm".into(),
            LayerKind::Dense => format!("dense{}", self.index),
        }
    }
}

/// Convolutions in order, then the LSTM, then hidden dense layers.
pub fn prunable_layers(spec: &ModelSpec) -> Vec<PrunableLayer> {
    let mut out: Vec<PrunableLayer> = spec
        .conv_layers
        .iter()
        .enumerate()
        .map(|(index, c)| PrunableLayer {
            kind: LayerKind::Conv,
            index,
            units: c.filters,
        })
        .collect();
    out.push(PrunableLayer {
        kind: LayerKind::Lstm,
        index: 0,
        units: spec.lstm_cells,
    });
    out.extend(
        spec.dense_layers
            .iter()
            .enumerate()
            .map(|(index, &units)| PrunableLayer {
                kind: LayerKind::Dense,
                index,
                units,
            }),
    );
    out
}

/// Per prunable layer sparsity ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityVector {
    pub s: Vec<f64>,
}

impl SparsityVector {
    pub fn zeros(len: usize) -> Self {
        Self { s: vec![0.0; len] }
    }
}

fn check_ratio(s: f64) -> Result<()> {
    if !(0.0..1.0).contains(&s) {
        return Err(Error::InvalidArgument(format!(
            "sparsity {s} outside [0, 1)"
        )));
    }
    Ok(())
}

/// Units removed from a layer of `units` at sparsity `s`.
pub fn removed_units(units: usize, s: f64) -> usize {
    (s * units as f64).floor() as usize
}

/// Spec after pruning prunable layer `idx` at sparsity `s`.
pub fn prune_spec(spec: &ModelSpec, idx: usize, s: f64) -> Result<ModelSpec> {
    check_ratio(s)?;
    let layers = prunable_layers(spec);
    let layer = layers
        .get(idx)
        .ok_or_else(|| Error::InvalidArgument(format!("no prunable layer {idx}")))?;
    let keep = layer.units - removed_units(layer.units, s);
    let mut out = spec.clone();
    match layer.kind {
        LayerKind::Conv => out.conv_layers[layer.index].filters = keep,
        LayerKind::Lstm => out.lstm_cells = keep,
        LayerKind::Dense => out.dense_layers[layer.index] = keep,
    }
    Ok(out)
}

/// Spec after pruning every prunable layer.
pub fn pruned_spec(spec: &ModelSpec, s: &SparsityVector) -> Result<ModelSpec> {
    check_len(spec, s)?;
    let mut out = spec.clone();
    for (i, &v) in s.s.iter().enumerate() {
        out = prune_spec(&out, i, v)?;
    }
    Ok(out)
}

pub fn pruned_flops(spec: &ModelSpec, s: &SparsityVector) -> Result<u64> {
    Ok(count_flops(&pruned_spec(spec, s)?).total)
}

fn check_len(spec: &ModelSpec, s: &SparsityVector) -> Result<()> {
    let n = prunable_layers(spec).len();
    if s.s.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} sparsities for {n} prunable layers",
            s.s.len()
        )));
    }
    Ok(())
}

/// Indices of the units to keep, in original order: the `removed` units with
/// the smallest norm go, ties removing the lower index first.
fn survivors(norms: &[f64], removed: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..norms.len()).collect();
    order.sort_by(|&a, &b| norms[a].total_cmp(&norms[b]).then(a.cmp(&b)));
    let mut keep: Vec<usize> = order[removed..].to_vec();
    keep.sort_unstable();
    keep
}

fn row_norms(t: &Tensor) -> Vec<f64> {
    let w = t.data.len() / t.shape[0];
    t.data
        .chunks(w)
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect()
}

/// Remove `⌊s · units⌋` output units of prunable layer `idx` by smallest L2
/// weight norm, and resize every consumer of those units.
pub fn prune_layer(params: &ModelParams, idx: usize, s: f64) -> Result<ModelParams> {
    let spec = prune_spec(&params.spec, idx, s)?;
    let layer = &prunable_layers(&params.spec)[idx];
    let removed = removed_units(layer.units, s);
    let mut p = params.clone();
    p.spec = spec;
    if removed == 0 {
        return Ok(p);
    }
    let cnn = params.spec.cnn_out_dim();
    match layer.kind {
        LayerKind::Conv => {
            let i = layer.index;
            let keep = survivors(&row_norms(&p.convs[i].weight), removed);
            let c = &mut p.convs[i];
            c.weight = c.weight.select_rows(&keep);
            c.bias = c.bias.select_rows(&keep);
            if i + 1 < p.convs.len() {
                let next = &mut p.convs[i + 1];
                next.weight = next.weight.select_axis1(&keep);
            } else {
                p.se.w1 = p.se.w1.select_axis1(&keep);
                p.se.w2 = p.se.w2.select_rows(&keep);
                p.se.b2 = p.se.b2.select_rows(&keep);
                let cols: Vec<usize> = keep
                    .iter()
                    .copied()
                    .chain(cnn..params.spec.activation_dim())
                    .collect();
                p.dense[0].weight = p.dense[0].weight.select_axis1(&cols);
            }
        }
        LayerKind::Lstm => {
            let h = layer.units;
            let ih = row_norms(&p.lstm.w_ih);
            let hh = row_norms(&p.lstm.w_hh);
            let norms: Vec<f64> = (0..h)
                .map(|u| {
                    (0..4)
                        .map(|g| ih[g * h + u].powi(2) + hh[g * h + u].powi(2))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect();
            let keep = survivors(&norms, removed);
            let rows: Vec<usize> = (0..4)
                .flat_map(|g| keep.iter().map(move |&u| g * h + u))
                .collect();
            p.lstm.w_ih = p.lstm.w_ih.select_rows(&rows);
            p.lstm.w_hh = p.lstm.w_hh.select_rows(&rows).select_axis1(&keep);
            p.lstm.b = p.lstm.b.select_rows(&rows);
            let cols: Vec<usize> = (0..cnn).chain(keep.iter().map(|&u| cnn + u)).collect();
            p.dense[0].weight = p.dense[0].weight.select_axis1(&cols);
        }
        LayerKind::Dense => {
            let i = layer.index;
            let keep = survivors(&row_norms(&p.dense[i].weight), removed);
            let d = &mut p.dense[i];
            d.weight = d.weight.select_rows(&keep);
            d.bias = d.bias.select_rows(&keep);
            let next = &mut p.dense[i + 1];
            next.weight = next.weight.select_axis1(&keep);
        }
    }
    p.check_shapes()?;
    Ok(p)
}

/// Prune every prunable layer in order.
pub fn prune_all(params: &ModelParams, s: &SparsityVector) -> Result<ModelParams> {
    check_len(&params.spec, s)?;
    let mut p = params.clone();
    for (i, &v) in s.s.iter().enumerate() {
        p = prune_layer(&p, i, v)?;
    }
    Ok(p)
}
