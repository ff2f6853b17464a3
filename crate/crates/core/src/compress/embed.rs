use super::prune::prunable_layers;
use crate::error::{Error, Result};
use crate::model::{count_flops, ModelSpec};

/// Actor input describing one prunable layer in the context of the walk.
/// Every component lies in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerEmbedding {
    /// Position among prunable layers, `idx / (P - 1)`.
    pub layer_index: f64,
    pub kind: f64,
    /// This layer's FLOPs over the baseline total.
    pub layer_flops: f64,
    /// FLOPs already removed by earlier layers' pruning, over the baseline.
    pub reduced_so_far: f64,
    /// FLOPs of the prunable layers after this one, over the baseline.
    pub remaining_after: f64,
}

impl LayerEmbedding {
    pub const DIM: usize = 5;

    pub fn to_array(&self) -> [f64; Self::DIM] {
        [
            self.layer_index,
            self.kind,
            self.layer_flops,
            self.reduced_so_far,
            self.remaining_after,
        ]
    }
}

/// Embedding of prunable layer `idx` of `current`, a spec in which the
/// layers before `idx` have already been pruned.
pub fn layer_embedding(
    current: &ModelSpec,
    baseline_flops: u64,
    idx: usize,
) -> Result<LayerEmbedding> {
    let layers = prunable_layers(current);
    let layer = layers
        .get(idx)
        .ok_or_else(|| Error::InvalidArgument(format!("no prunable layer {idx}")))?;
    let report = count_flops(current);
    let n = baseline_flops as f64;
    let flops_of = |name: String| report.layer(&name).unwrap_or(0) as f64;
    let remaining: f64 = layers[idx + 1..]
        .iter()
        .map(|l| flops_of(l.flops_name()))
        .sum();
    Ok(LayerEmbedding {
        layer_index: if layers.len() > 1 {
            idx as f64 / (layers.len() - 1) as f64
        } else {
            0.0
        },
        kind: layer.kind.code(),
        layer_flops: flops_of(layer.flops_name()) / n,
        reduced_so_far: (n - report.total as f64).max(0.0) / n,
        remaining_after: remaining / n,
    })
}
