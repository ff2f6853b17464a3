//! Straight-line scalar re-implementation of one window's forward pass. Every
//! scalar multiply, add, subtract and divide goes through [`Counter`], so the
//! same code doubles as the instrumented FLOPs oracle.

use handwash::model::{ModelParams, Tensor};

#[derive(Default)]
pub struct Counter {
    pub flops: u64,
}

impl Counter {
    fn mul(&mut self, a: f64, b: f64) -> f64 {
        self.flops += 1;
        a * b
    }
    fn add(&mut self, a: f64, b: f64) -> f64 {
        self.flops += 1;
        a + b
    }
    fn sub(&mut self, a: f64, b: f64) -> f64 {
        self.flops += 1;
        a - b
    }
    fn div(&mut self, a: f64, b: f64) -> f64 {
        self.flops += 1;
        a / b
    }
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn at(t: &Tensor, idx: &[usize]) -> f64 {
    let mut flat = 0;
    for (i, &d) in idx.iter().enumerate() {
        flat = flat * t.shape[i] + d;
    }
    t.data[flat]
}

fn dense(c: &mut Counter, w: &Tensor, b: &Tensor, x: &[f64]) -> Vec<f64> {
    (0..w.shape[0])
        .map(|r| {
            let mut acc = 0.0;
            for (j, &xj) in x.iter().enumerate() {
                let p = c.mul(at(w, &[r, j]), xj);
                acc = c.add(acc, p);
            }
            c.add(acc, b.data[r])
        })
        .collect()
}

pub struct OracleOut {
    pub probs: Vec<f64>,
    pub activation: Vec<f64>,
    pub cell: Vec<f64>,
}

/// One window: `features` raw, `prev_act`/`prev_cell` carried state.
pub fn forward(
    p: &ModelParams,
    features: &[f64],
    prev_act: &[f64],
    prev_cell: &[f64],
    c: &mut Counter,
) -> OracleOut {
    let spec = &p.spec;
    let mut x = Vec::new();
    for (i, &f) in features.iter().enumerate() {
        let centered = c.sub(f, p.norm_mean.data[i]);
        x.push(c.mul(centered, p.norm_scale.data[i]));
    }
    x.extend_from_slice(prev_act);
    let len = x.len();

    // convolutions, zero padded
    let mut maps: Vec<Vec<f64>> = vec![x.clone()];
    for conv in &p.convs {
        let (cout, cin, k) = (
            conv.weight.shape[0],
            conv.weight.shape[1],
            conv.weight.shape[2],
        );
        let pad = (k / 2) as isize;
        let mut next = Vec::new();
        for o in 0..cout {
            let mut row = vec![0.0; len];
            for (t, out) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                for i in 0..cin {
                    for j in 0..k {
                        let src = t as isize + j as isize - pad;
                        if src < 0 || src >= len as isize {
                            continue;
                        }
                        let prod = c.mul(at(&conv.weight, &[o, i, j]), maps[i][src as usize]);
                        acc = c.add(acc, prod);
                    }
                }
                acc = c.add(acc, conv.bias.data[o]);
                *out = acc.max(0.0);
            }
            next.push(row);
        }
        maps = next;
    }

    // squeeze-excite
    let squeezed: Vec<f64> = maps
        .iter()
        .map(|row| {
            let mut acc = 0.0;
            for &v in row {
                acc = c.add(acc, v);
            }
            c.div(acc, len as f64)
        })
        .collect();
    let hidden: Vec<f64> = dense(c, &p.se.w1, &p.se.b1, &squeezed)
        .into_iter()
        .map(|v| v.max(0.0))
        .collect();
    let gate: Vec<f64> = dense(c, &p.se.w2, &p.se.b2, &hidden)
        .into_iter()
        .map(sig)
        .collect();
    for (row, &g) in maps.iter_mut().zip(&gate) {
        for v in row.iter_mut() {
            *v = c.mul(*v, g);
        }
    }
    let pooled: Vec<f64> = maps
        .iter()
        .map(|row| {
            let mut acc = 0.0;
            for &v in row {
                acc = c.add(acc, v);
            }
            c.div(acc, len as f64)
        })
        .collect();

    // attention over scalar tokens
    let a = &p.attention;
    let d = a.wq.shape[0];
    let proj = |c: &mut Counter, w: &Tensor, b: &Tensor| -> Vec<Vec<f64>> {
        x.iter().map(|&xt| dense(c, w, b, &[xt])).collect()
    };
    let q = proj(c, &a.wq, &a.bq);
    let k = proj(c, &a.wk, &a.bk);
    let v = proj(c, &a.wv, &a.bv);
    let scale = 1.0 / (d as f64).sqrt();
    let mut att = vec![vec![0.0; d]; len];
    for t in 0..len {
        let mut scores = vec![0.0; len];
        for j in 0..len {
            let mut acc = 0.0;
            for r in 0..d {
                let prod = c.mul(q[t][r], k[j][r]);
                acc = c.add(acc, prod);
            }
            scores[j] = c.mul(acc, scale);
        }
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for s in scores.iter_mut() {
            *s = c.sub(*s, max).exp();
            sum = c.add(sum, *s);
        }
        for s in scores.iter_mut() {
            *s = c.div(*s, sum);
        }
        for r in 0..d {
            let mut acc = 0.0;
            for j in 0..len {
                let prod = c.mul(scores[j], v[j][r]);
                acc = c.add(acc, prod);
            }
            att[t][r] = acc;
        }
    }

    // LSTM over the attended positions
    let cnn = spec.cnn_out_dim();
    let n = spec.lstm_cells;
    let mut h = prev_act[cnn..].to_vec();
    let mut cell = prev_cell.to_vec();
    for xt in &att {
        let mut pre = vec![0.0; 4 * n];
        for (r, out) in pre.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, &xj) in xt.iter().enumerate() {
                let prod = c.mul(at(&p.lstm.w_ih, &[r, j]), xj);
                acc = c.add(acc, prod);
            }
            for (j, &hj) in h.iter().enumerate() {
                let prod = c.mul(at(&p.lstm.w_hh, &[r, j]), hj);
                acc = c.add(acc, prod);
            }
            *out = c.add(acc, p.lstm.b.data[r]);
        }
        let mut h2 = vec![0.0; n];
        for u in 0..n {
            let (i, f, g, o) = (
                sig(pre[u]),
                sig(pre[n + u]),
                pre[2 * n + u].tanh(),
                sig(pre[3 * n + u]),
            );
            let keep = c.mul(f, cell[u]);
            let write = c.mul(i, g);
            cell[u] = c.add(keep, write);
            h2[u] = c.mul(o, cell[u].tanh());
        }
        h = h2;
    }

    let mut activation = pooled;
    activation.extend_from_slice(&h);

    let mut cur = activation.clone();
    for (i, layer) in p.dense.iter().enumerate() {
        cur = dense(c, &layer.weight, &layer.bias, &cur);
        if i + 1 < p.dense.len() {
            cur.iter_mut().for_each(|v| *v = v.max(0.0));
        }
    }
    let max = cur.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    let mut exps = Vec::new();
    for &z in &cur {
        let e = c.sub(z, max).exp();
        sum = c.add(sum, e);
        exps.push(e);
    }
    let probs = exps.into_iter().map(|e| c.div(e, sum)).collect();
    OracleOut {
        probs,
        activation,
        cell,
    }
}
