use crate::error::{shape_err, Error, Result};
use crate::model::tensor::{axpy, dot, Tensor};

/// Single-head scaled dot-product self-attention with learned query, key and
/// value projections. Sequences are row-major `[len, dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfAttention {
    /// `[dim, in]`
    pub wq: Tensor,
    pub bq: Tensor,
    pub wk: Tensor,
    pub bk: Tensor,
    pub wv: Tensor,
    pub bv: Tensor,
}

#[derive(Debug, Clone)]
pub struct AttentionCache {
    pub q: Vec<f64>,
    pub k: Vec<f64>,
    pub v: Vec<f64>,
    /// `[len, len]`, rows sum to one.
    pub weights: Vec<f64>,
}

impl SelfAttention {
    pub fn zeros(input_dim: usize, dim: usize) -> Self {
        Self {
            wq: Tensor::zeros(&[dim, input_dim]),
            bq: Tensor::zeros(&[dim]),
            wk: Tensor::zeros(&[dim, input_dim]),
            bk: Tensor::zeros(&[dim]),
            wv: Tensor::zeros(&[dim, input_dim]),
            bv: Tensor::zeros(&[dim]),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.wq.shape[1]
    }

    pub fn dim(&self) -> usize {
        self.wq.shape[0]
    }

    fn project(w: &Tensor, b: &Tensor, x: &[f64], din: usize, len: usize) -> Vec<f64> {
        let d = w.shape[0];
        let mut out = Vec::with_capacity(len * d);
        for t in 0..len {
            let xt = &x[t * din..(t + 1) * din];
            out.extend((0..d).map(|r| b.data[r] + dot(w.row(r), xt)));
        }
        out
    }

    pub fn forward(&self, x: &[f64], len: usize) -> Result<(Vec<f64>, AttentionCache)> {
        let (din, d) = (self.input_dim(), self.dim());
        if len == 0 {
            return Err(Error::EmptyInput);
        }
        if x.len() != len * din {
            return Err(shape_err(
                "self_attention",
                [len, din],
                [len, x.len() / len.max(1)],
            ));
        }
        let q = Self::project(&self.wq, &self.bq, x, din, len);
        let k = Self::project(&self.wk, &self.bk, x, din, len);
        let v = Self::project(&self.wv, &self.bv, x, din, len);
        let scale = 1.0 / (d as f64).sqrt();
        let mut weights = vec![0.0; len * len];
        let mut out = vec![0.0; len * d];
        for t in 0..len {
            let qt = &q[t * d..(t + 1) * d];
            let row = &mut weights[t * len..(t + 1) * len];
            let mut max = f64::NEG_INFINITY;
            for (j, r) in row.iter_mut().enumerate() {
                *r = dot(qt, &k[j * d..(j + 1) * d]) * scale;
                max = max.max(*r);
            }
            let mut sum = 0.0;
            for r in row.iter_mut() {
                *r = (*r - max).exp();
                sum += *r;
            }
            for r in row.iter_mut() {
                *r /= sum;
            }
            let ot = &mut out[t * d..(t + 1) * d];
            for (j, &a) in row.iter().enumerate() {
                axpy(a, &v[j * d..(j + 1) * d], ot);
            }
        }
        Ok((out, AttentionCache { q, k, v, weights }))
    }

    /// Returns the gradient with respect to `x` (`[len, in]`).
    pub fn backward(
        &self,
        x: &[f64],
        len: usize,
        cache: &AttentionCache,
        d_out: &[f64],
        grad: &mut SelfAttention,
    ) -> Vec<f64> {
        let (din, d) = (self.input_dim(), self.dim());
        let scale = 1.0 / (d as f64).sqrt();
        let mut dq = vec![0.0; len * d];
        let mut dk = vec![0.0; len * d];
        let mut dv = vec![0.0; len * d];
        let mut d_scores = vec![0.0; len];
        for t in 0..len {
            let dot_t = &d_out[t * d..(t + 1) * d];
            let a = &cache.weights[t * len..(t + 1) * len];
            let mut weighted = 0.0;
            for j in 0..len {
                let da = dot(dot_t, &cache.v[j * d..(j + 1) * d]);
                d_scores[j] = da;
                weighted += a[j] * da;
                axpy(a[j], dot_t, &mut dv[j * d..(j + 1) * d]);
            }
            let qt = &cache.q[t * d..(t + 1) * d];
            for j in 0..len {
                let ds = a[j] * (d_scores[j] - weighted) * scale;
                if ds == 0.0 {
                    continue;
                }
                axpy(
                    ds,
                    &cache.k[j * d..(j + 1) * d],
                    &mut dq[t * d..(t + 1) * d],
                );
                axpy(ds, qt, &mut dk[j * d..(j + 1) * d]);
            }
        }
        let mut dx = vec![0.0; len * din];
        for (w, gw, gb, dp) in [
            (&self.wq, &mut grad.wq, &mut grad.bq, &dq),
            (&self.wk, &mut grad.wk, &mut grad.bk, &dk),
            (&self.wv, &mut grad.wv, &mut grad.bv, &dv),
        ] {
            for t in 0..len {
                let xt = &x[t * din..(t + 1) * din];
                let dxt = &mut dx[t * din..(t + 1) * din];
                for r in 0..d {
                    let g = dp[t * d + r];
                    gb.data[r] += g;
                    axpy(g, xt, gw.row_mut(r));
                    axpy(g, w.row(r), dxt);
                }
            }
        }
        dx
    }
}
