use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub kernel: usize,
    pub filters: usize,
}

/// Layer dimensions of the hybrid classifier.
///
/// The window's input vector (features followed by the previous window's
/// activation vector) is treated as a one-channel sequence. The CNN branch runs
/// same-padded convolutions along it, squeeze-excite and global average
/// pooling; the RNN branch runs self-attention over its positions and feeds the
/// attended sequence through an LSTM whose state carries across windows. The
/// two branch outputs form the activation vector, which also feeds the dense
/// head.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub feature_dim: usize,
    pub conv_layers: Vec<ConvSpec>,
    /// Bottleneck width of the squeeze-excite block.
    pub se_hidden: usize,
    pub attention_dim: usize,
    pub lstm_cells: usize,
    /// Hidden dense widths; the classification layer is appended.
    pub dense_layers: Vec<usize>,
    pub num_classes: usize,
}

pub const DEFAULT_SE_REDUCTION: usize = 4;

impl ModelSpec {
    /// Full-size architecture: convs 3/5/7 with 128/256/512 filters, a 50-cell
    /// LSTM and three 250-unit dense layers over ten step classes.
    pub fn full_size(feature_dim: usize) -> Self {
        Self::builder(feature_dim)
            .conv(&[(3, 128), (5, 256), (7, 512)])
            .build_with(16, 50, &[250, 250, 250], 10, DEFAULT_SE_REDUCTION)
    }

    pub fn builder(feature_dim: usize) -> SpecBuilder {
        SpecBuilder {
            feature_dim,
            conv: Vec::new(),
        }
    }

    pub fn cnn_out_dim(&self) -> usize {
        self.conv_layers.last().map_or(0, |c| c.filters)
    }

    pub fn activation_dim(&self) -> usize {
        self.cnn_out_dim() + self.lstm_cells
    }

    /// Length of the per-window input sequence.
    pub fn input_dim(&self) -> usize {
        self.feature_dim + self.activation_dim()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.feature_dim == 0 {
            return bad("feature_dim must be positive".into());
        }
        if self.conv_layers.is_empty() {
            return bad("at least one convolution layer is required".into());
        }
        for (i, c) in self.conv_layers.iter().enumerate() {
            if c.filters == 0 || c.kernel == 0 || c.kernel % 2 == 0 {
                return bad(format!(
                    "conv {i}: need odd kernel and positive filters, got {c:?}"
                ));
            }
        }
        if self.se_hidden == 0 || self.attention_dim == 0 || self.lstm_cells == 0 {
            return bad("se_hidden, attention_dim and lstm_cells must be positive".into());
        }
        if self.dense_layers.iter().any(|&w| w == 0) {
            return bad("dense widths must be positive".into());
        }
        if self.num_classes < 2 {
            return bad("need at least two classes".into());
        }
        Ok(())
    }
}

pub struct SpecBuilder {
    feature_dim: usize,
    conv: Vec<ConvSpec>,
}

impl SpecBuilder {
    pub fn conv(mut self, layers: &[(usize, usize)]) -> Self {
        self.conv = layers
            .iter()
            .map(|&(kernel, filters)| ConvSpec { kernel, filters })
            .collect();
        self
    }

    pub fn build_with(
        self,
        attention_dim: usize,
        lstm_cells: usize,
        dense: &[usize],
        num_classes: usize,
        se_reduction: usize,
    ) -> ModelSpec {
        let last = self.conv.last().map_or(1, |c| c.filters);
        ModelSpec {
            feature_dim: self.feature_dim,
            conv_layers: self.conv,
            se_hidden: (last / se_reduction.max(1)).max(1),
            attention_dim,
            lstm_cells,
            dense_layers: dense.to_vec(),
            num_classes,
        }
    }
}
