use crate::error::{shape_err, Result};
use crate::model::tensor::{dot, sigmoid, FeatureMap, Tensor};

/// Squeeze-and-excite channel gating: global average per channel, a ReLU
/// bottleneck, a sigmoid expansion, then per-channel rescaling of the input.
#[derive(Debug, Clone, PartialEq)]
pub struct SqueezeExcite {
    /// `[hidden, channels]`
    pub w1: Tensor,
    pub b1: Tensor,
    /// `[channels, hidden]`
    pub w2: Tensor,
    pub b2: Tensor,
}

#[derive(Debug, Clone)]
pub struct SeCache {
    pub squeezed: Vec<f64>,
    pub hidden: Vec<f64>,
    pub gate: Vec<f64>,
}

impl SqueezeExcite {
    pub fn zeros(channels: usize, hidden: usize) -> Self {
        Self {
            w1: Tensor::zeros(&[hidden, channels]),
            b1: Tensor::zeros(&[hidden]),
            w2: Tensor::zeros(&[channels, hidden]),
            b2: Tensor::zeros(&[channels]),
        }
    }

    pub fn channels(&self) -> usize {
        self.w1.shape[1]
    }

    pub fn hidden(&self) -> usize {
        self.w1.shape[0]
    }

    pub fn forward(&self, input: &FeatureMap) -> Result<(FeatureMap, SeCache)> {
        if input.channels != self.channels() {
            return Err(shape_err(
                "squeeze_excite",
                [self.channels(), input.len],
                [input.channels, input.len],
            ));
        }
        let n = input.len as f64;
        let squeezed: Vec<f64> = (0..input.channels)
            .map(|c| input.channel(c).iter().sum::<f64>() / n)
            .collect();
        let hidden: Vec<f64> = (0..self.hidden())
            .map(|h| (self.b1.data[h] + dot(self.w1.row(h), &squeezed)).max(0.0))
            .collect();
        let gate: Vec<f64> = (0..self.channels())
            .map(|c| sigmoid(self.b2.data[c] + dot(self.w2.row(c), &hidden)))
            .collect();
        let mut out = input.clone();
        for (c, &g) in gate.iter().enumerate() {
            out.channel_mut(c).iter_mut().for_each(|v| *v *= g);
        }
        Ok((
            out,
            SeCache {
                squeezed,
                hidden,
                gate,
            },
        ))
    }

    pub fn backward(
        &self,
        input: &FeatureMap,
        cache: &SeCache,
        d_out: &FeatureMap,
        grad: &mut SqueezeExcite,
    ) -> FeatureMap {
        let n = input.len as f64;
        let (ch, hid) = (self.channels(), self.hidden());
        // d gate pre-activation
        let d_pre2: Vec<f64> = (0..ch)
            .map(|c| {
                let dg = dot(d_out.channel(c), input.channel(c));
                let g = cache.gate[c];
                dg * g * (1.0 - g)
            })
            .collect();
        let mut d_hidden = vec![0.0; hid];
        for c in 0..ch {
            grad.b2.data[c] += d_pre2[c];
            let gw = grad.w2.row_mut(c);
            for h in 0..hid {
                gw[h] += d_pre2[c] * cache.hidden[h];
            }
            let w = self.w2.row(c);
            for h in 0..hid {
                d_hidden[h] += d_pre2[c] * w[h];
            }
        }
        let mut d_squeezed = vec![0.0; ch];
        for h in 0..hid {
            if cache.hidden[h] <= 0.0 {
                continue;
            }
            let dp = d_hidden[h];
            grad.b1.data[h] += dp;
            let gw = grad.w1.row_mut(h);
            for c in 0..ch {
                gw[c] += dp * cache.squeezed[c];
            }
            let w = self.w1.row(h);
            for c in 0..ch {
                d_squeezed[c] += dp * w[c];
            }
        }
        let mut d_in = FeatureMap::zeros(ch, input.len);
        for c in 0..ch {
            let g = cache.gate[c];
            let extra = d_squeezed[c] / n;
            for (d, &u) in d_in.channel_mut(c).iter_mut().zip(d_out.channel(c)) {
                *d = u * g + extra;
            }
        }
        d_in
    }
}
