use crate::error::{shape_err, Result};
use crate::model::tensor::{FeatureMap, Tensor};

/// 1-D convolution over the sequence axis with same-padding, followed by ReLU.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    /// `[out, in, kernel]`
    pub weight: Tensor,
    /// `[out]`
    pub bias: Tensor,
}

/// Output positions `t` for which tap `j` reads an in-range input sample.
#[inline]
fn tap_range(len: usize, pad: usize, j: usize) -> (usize, usize) {
    let lo = pad.saturating_sub(j);
    let hi = (len + pad).saturating_sub(j).min(len);
    (lo, hi)
}

impl Conv1d {
    pub fn zeros(in_channels: usize, out_channels: usize, kernel: usize) -> Self {
        Self {
            weight: Tensor::zeros(&[out_channels, in_channels, kernel]),
            bias: Tensor::zeros(&[out_channels]),
        }
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape[0]
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape[1]
    }

    pub fn kernel(&self) -> usize {
        self.weight.shape[2]
    }

    /// Pre-activation `z[o][t] = b[o] + sum_i sum_j w[o][i][j] * x[i][t + j - pad]`.
    fn linear(&self, input: &FeatureMap) -> FeatureMap {
        let (cin, k, len) = (self.in_channels(), self.kernel(), input.len);
        let pad = k / 2;
        let mut out = FeatureMap::zeros(self.out_channels(), len);
        for o in 0..self.out_channels() {
            let row = out.channel_mut(o);
            row.fill(self.bias.data[o]);
            for i in 0..cin {
                let x = input.channel(i);
                let w = &self.weight.data[(o * cin + i) * k..(o * cin + i + 1) * k];
                for (j, &wj) in w.iter().enumerate() {
                    let (lo, hi) = tap_range(len, pad, j);
                    if lo >= hi {
                        continue;
                    }
                    let src = &x[lo + j - pad..hi + j - pad];
                    for (r, &s) in row[lo..hi].iter_mut().zip(src) {
                        *r += wj * s;
                    }
                }
            }
        }
        out
    }

    /// Convolution, bias, ReLU.
    pub fn forward(&self, input: &FeatureMap) -> Result<FeatureMap> {
        if input.channels != self.in_channels() {
            return Err(shape_err(
                "conv",
                [self.in_channels(), input.len],
                [input.channels, input.len],
            ));
        }
        let mut out = self.linear(input);
        out.data.iter_mut().for_each(|v| *v = v.max(0.0));
        Ok(out)
    }

    /// Accumulates parameter gradients into `grad` and returns the gradient
    /// with respect to `input`. `output` is the post-ReLU forward result.
    pub fn backward(
        &self,
        input: &FeatureMap,
        output: &FeatureMap,
        d_out: &FeatureMap,
        grad: &mut Conv1d,
    ) -> FeatureMap {
        let (cin, k, len) = (self.in_channels(), self.kernel(), input.len);
        let pad = k / 2;
        let mut d_in = FeatureMap::zeros(cin, len);
        let mut dz = vec![0.0; len];
        for o in 0..self.out_channels() {
            let y = output.channel(o);
            let dy = d_out.channel(o);
            let mut any = false;
            for t in 0..len {
                dz[t] = if y[t] > 0.0 { dy[t] } else { 0.0 };
                any |= dz[t] != 0.0;
            }
            if !any {
                continue;
            }
            grad.bias.data[o] += dz.iter().sum::<f64>();
            for i in 0..cin {
                let x = input.channel(i);
                let base = (o * cin + i) * k;
                for j in 0..k {
                    let (lo, hi) = tap_range(len, pad, j);
                    if lo >= hi {
                        continue;
                    }
                    let src = &x[lo + j - pad..hi + j - pad];
                    grad.weight.data[base + j] +=
                        dz[lo..hi].iter().zip(src).map(|(a, b)| a * b).sum::<f64>();
                    let wj = self.weight.data[base + j];
                    let dst = &mut d_in.channel_mut(i)[lo + j - pad..hi + j - pad];
                    for (d, &g) in dst.iter_mut().zip(&dz[lo..hi]) {
                        *d += wj * g;
                    }
                }
            }
        }
        d_in
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct triple loop with explicit zero padding.
    fn oracle(conv: &Conv1d, x: &FeatureMap) -> Vec<f64> {
        let (cout, cin, k) = (conv.out_channels(), conv.in_channels(), conv.kernel());
        let pad = (k / 2) as isize;
        let mut out = vec![0.0; cout * x.len];
        for o in 0..cout {
            for t in 0..x.len {
                let mut acc = conv.bias.data[o];
                for i in 0..cin {
                    for j in 0..k {
                        let src = t as isize + j as isize - pad;
                        if src >= 0 && (src as usize) < x.len {
                            acc += conv.weight.data[(o * cin + i) * k + j]
                                * x.data[i * x.len + src as usize];
                        }
                    }
                }
                out[o * x.len + t] = acc.max(0.0);
            }
        }
        out
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let conv = Conv1d::zeros(2, 3, 5);
        let x = FeatureMap::from_vec(2, 4, vec![1.0, -2.0, 3.0, 4.0, 0.5, 0.5, 0.5, 9.0]);
        assert!(conv.forward(&x).unwrap().data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_kernel_passes_non_negative_input() {
        let mut conv = Conv1d::zeros(1, 1, 3);
        conv.weight.data = vec![0.0, 1.0, 0.0];
        let x = FeatureMap::from_vec(1, 5, vec![0.0, 1.5, 2.0, 0.25, 7.0]);
        assert_eq!(conv.forward(&x).unwrap(), x);
    }

    #[test]
    fn matches_triple_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(cin, cout, k, len) in &[
            (1, 4, 3, 6),
            (3, 2, 5, 4),
            (2, 3, 7, 3),
            (2, 2, 7, 1),
            (4, 4, 7, 12),
        ] {
            let conv = Conv1d {
                weight: Tensor::uniform(&[cout, cin, k], 1.0, &mut rng),
                bias: Tensor::uniform(&[cout], 0.5, &mut rng),
            };
            let x = FeatureMap::from_vec(
                cin,
                len,
                (0..cin * len).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            );
            let got = conv.forward(&x).unwrap();
            for (a, b) in got.data.iter().zip(oracle(&conv, &x)) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn channel_mismatch_is_reported() {
        let conv = Conv1d::zeros(2, 1, 3);
        let x = FeatureMap::zeros(3, 4);
        let msg = conv.forward(&x).unwrap_err().to_string();
        assert!(msg.contains("[2, 4]") && msg.contains("[3, 4]"), "{msg}");
    }
}
