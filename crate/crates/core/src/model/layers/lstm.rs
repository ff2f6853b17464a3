use crate::error::{shape_err, Result};
use crate::model::tensor::{axpy, dot, sigmoid, Tensor};

/// LSTM cell. Gate rows are stacked `[input, forget, candidate, output]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lstm {
    /// `[4 * cells, in]`
    pub w_ih: Tensor,
    /// `[4 * cells, cells]`
    pub w_hh: Tensor,
    /// `[4 * cells]`
    pub b: Tensor,
}

#[derive(Debug, Clone)]
pub struct LstmCache {
    /// `h_0 ..= h_T`
    pub hs: Vec<Vec<f64>>,
    /// `c_0 ..= c_T`
    pub cs: Vec<Vec<f64>>,
    /// Post-nonlinearity gates per step, `[4 * cells]`.
    pub gates: Vec<Vec<f64>>,
}

impl Lstm {
    pub fn zeros(input_dim: usize, cells: usize) -> Self {
        Self {
            w_ih: Tensor::zeros(&[4 * cells, input_dim]),
            w_hh: Tensor::zeros(&[4 * cells, cells]),
            b: Tensor::zeros(&[4 * cells]),
        }
    }

    pub fn cells(&self) -> usize {
        self.w_hh.shape[1]
    }

    pub fn input_dim(&self) -> usize {
        self.w_ih.shape[1]
    }

    fn gates(&self, x: &[f64], h: &[f64]) -> Vec<f64> {
        let n = self.cells();
        let mut g: Vec<f64> = (0..4 * n)
            .map(|r| self.b.data[r] + dot(self.w_ih.row(r), x) + dot(self.w_hh.row(r), h))
            .collect();
        for (r, v) in g.iter_mut().enumerate() {
            *v = if (2 * n..3 * n).contains(&r) {
                v.tanh()
            } else {
                sigmoid(*v)
            };
        }
        g
    }

    fn check(&self, x: &[f64], h: &[f64], c: &[f64]) -> Result<()> {
        let n = self.cells();
        if x.len() != self.input_dim() || h.len() != n || c.len() != n {
            return Err(shape_err(
                "lstm",
                [self.input_dim(), n, n],
                [x.len(), h.len(), c.len()],
            ));
        }
        Ok(())
    }

    /// One cell update: `c' = f*c + i*g`, `h' = o*tanh(c')`.
    pub fn step(&self, x: &[f64], h: &[f64], c: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check(x, h, c)?;
        let g = self.gates(x, h);
        let n = self.cells();
        let c2: Vec<f64> = (0..n)
            .map(|u| g[n + u] * c[u] + g[u] * g[2 * n + u])
            .collect();
        let h2: Vec<f64> = (0..n).map(|u| g[3 * n + u] * c2[u].tanh()).collect();
        Ok((h2, c2))
    }

    /// Runs over a `[len, in]` sequence from the given initial state.
    pub fn forward_sequence(
        &self,
        x: &[f64],
        len: usize,
        h0: &[f64],
        c0: &[f64],
    ) -> Result<LstmCache> {
        let din = self.input_dim();
        if x.len() != len * din {
            return Err(shape_err("lstm", [len, din], [len, x.len() / len.max(1)]));
        }
        if len > 0 {
            self.check(&x[..din], h0, c0)?;
        }
        let n = self.cells();
        let mut cache = LstmCache {
            hs: vec![h0.to_vec()],
            cs: vec![c0.to_vec()],
            gates: Vec::with_capacity(len),
        };
        for t in 0..len {
            let g = self.gates(&x[t * din..(t + 1) * din], &cache.hs[t]);
            let c_prev = &cache.cs[t];
            let c2: Vec<f64> = (0..n)
                .map(|u| g[n + u] * c_prev[u] + g[u] * g[2 * n + u])
                .collect();
            let h2: Vec<f64> = (0..n).map(|u| g[3 * n + u] * c2[u].tanh()).collect();
            cache.gates.push(g);
            cache.cs.push(c2);
            cache.hs.push(h2);
        }
        Ok(cache)
    }

    /// Backpropagates from gradients on the final `(h, c)`. Returns
    /// `(dx, dh0, dc0)`.
    pub fn backward_sequence(
        &self,
        x: &[f64],
        len: usize,
        cache: &LstmCache,
        dh_last: &[f64],
        dc_last: &[f64],
        grad: &mut Lstm,
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (n, din) = (self.cells(), self.input_dim());
        let mut dx = vec![0.0; len * din];
        let mut dh = dh_last.to_vec();
        let mut dc = dc_last.to_vec();
        let mut dpre = vec![0.0; 4 * n];
        for t in (0..len).rev() {
            let g = &cache.gates[t];
            let c = &cache.cs[t + 1];
            let c_prev = &cache.cs[t];
            for u in 0..n {
                let (i, f, cand, o) = (g[u], g[n + u], g[2 * n + u], g[3 * n + u]);
                let tc = c[u].tanh();
                let d_o = dh[u] * tc;
                let dcu = dc[u] + dh[u] * o * (1.0 - tc * tc);
                dpre[u] = dcu * cand * i * (1.0 - i);
                dpre[n + u] = dcu * c_prev[u] * f * (1.0 - f);
                dpre[2 * n + u] = dcu * i * (1.0 - cand * cand);
                dpre[3 * n + u] = d_o * o * (1.0 - o);
                dc[u] = dcu * f;
            }
            let xt = &x[t * din..(t + 1) * din];
            let h_prev = &cache.hs[t];
            let mut dh_prev = vec![0.0; n];
            let dxt = &mut dx[t * din..(t + 1) * din];
            for (r, &dp) in dpre.iter().enumerate() {
                if dp == 0.0 {
                    continue;
                }
                grad.b.data[r] += dp;
                axpy(dp, xt, grad.w_ih.row_mut(r));
                axpy(dp, h_prev, grad.w_hh.row_mut(r));
                axpy(dp, self.w_ih.row(r), dxt);
                axpy(dp, self.w_hh.row(r), &mut dh_prev);
            }
            dh = dh_prev;
        }
        (dx, dh, dc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_halve_the_cell() {
        let lstm = Lstm::zeros(3, 2);
        let c = [0.8, -2.0];
        let (h2, c2) = lstm.step(&[1.0, 2.0, 3.0], &[0.3, 0.1], &c).unwrap();
        for u in 0..2 {
            assert!((c2[u] - 0.5 * c[u]).abs() < 1e-15);
            assert!((h2[u] - 0.5 * c2[u].tanh()).abs() < 1e-15);
        }
    }

    #[test]
    fn saturated_forget_gate_remembers() {
        let mut lstm = Lstm::zeros(1, 2);
        lstm.b.data[2..4].fill(60.0);
        let (_, c2) = lstm.step(&[0.5], &[0.0, 0.0], &[1.25, -3.0]).unwrap();
        assert!((c2[0] - 1.25).abs() < 1e-9 && (c2[1] + 3.0).abs() < 1e-9);
    }

    #[test]
    fn matches_scalar_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (din, n) = (3, 2);
        let lstm = Lstm {
            w_ih: Tensor::uniform(&[4 * n, din], 1.0, &mut rng),
            w_hh: Tensor::uniform(&[4 * n, n], 1.0, &mut rng),
            b: Tensor::uniform(&[4 * n], 1.0, &mut rng),
        };
        let x: Vec<f64> = (0..din).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (h2, c2) = lstm.step(&x, &h, &c).unwrap();
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        for u in 0..n {
            let pre = |gate: usize| {
                let r = gate * n + u;
                let mut acc = lstm.b.data[r];
                for j in 0..din {
                    acc += lstm.w_ih.data[r * din + j] * x[j];
                }
                for j in 0..n {
                    acc += lstm.w_hh.data[r * n + j] * h[j];
                }
                acc
            };
            let (i, f, g, o) = (sig(pre(0)), sig(pre(1)), pre(2).tanh(), sig(pre(3)));
            let cu = f * c[u] + i * g;
            assert!((c2[u] - cu).abs() < 1e-6);
            assert!((h2[u] - o * cu.tanh()).abs() < 1e-6);
        }
    }

    #[test]
    fn sequence_equals_repeated_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let lstm = Lstm {
            w_ih: Tensor::uniform(&[8, 1], 1.0, &mut rng),
            w_hh: Tensor::uniform(&[8, 2], 1.0, &mut rng),
            b: Tensor::uniform(&[8], 1.0, &mut rng),
        };
        let x = [0.1, -0.4, 0.9, 0.3];
        let cache = lstm
            .forward_sequence(&x, 4, &[0.2, 0.0], &[0.0, -0.1])
            .unwrap();
        let (mut h, mut c) = (vec![0.2, 0.0], vec![0.0, -0.1]);
        for xt in x {
            (h, c) = lstm.step(&[xt], &h, &c).unwrap();
        }
        assert_eq!(cache.hs[4], h);
        assert_eq!(cache.cs[4], c);
    }

    #[test]
    fn shape_mismatch() {
        let lstm = Lstm::zeros(2, 3);
        assert!(lstm.step(&[1.0], &[0.0; 3], &[0.0; 3]).is_err());
        assert!(lstm.step(&[1.0, 2.0], &[0.0; 2], &[0.0; 3]).is_err());
    }
}
