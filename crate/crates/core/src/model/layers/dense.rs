use crate::error::{shape_err, Result};
use crate::model::tensor::{axpy, dot, Tensor};

/// Fully connected layer `y = W x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `[out, in]`
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Dense {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: Tensor::zeros(&[output, input]),
            bias: Tensor::zeros(&[output]),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.shape[1]
    }

    pub fn output_dim(&self) -> usize {
        self.weight.shape[0]
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(shape_err("dense", [self.input_dim()], [x.len()]));
        }
        Ok((0..self.output_dim())
            .map(|r| self.bias.data[r] + dot(self.weight.row(r), x))
            .collect())
    }

    /// `dy` is the gradient on the pre-activation output.
    pub fn backward(&self, x: &[f64], dy: &[f64], grad: &mut Dense) -> Vec<f64> {
        let mut dx = vec![0.0; self.input_dim()];
        for (r, &g) in dy.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            grad.bias.data[r] += g;
            axpy(g, x, grad.weight.row_mut(r));
            axpy(g, self.weight.row(r), &mut dx);
        }
        dx
    }
}
