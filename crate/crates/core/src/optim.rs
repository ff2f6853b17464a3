//! Adam over a flat list of tensors.

use crate::model::Tensor;

#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Round parameters to f32 after every update.
    pub round_f32: bool,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            round_f32: false,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn rounding_to_f32(mut self) -> Self {
        self.round_f32 = true;
        self
    }

    pub fn step(&mut self, params: Vec<&mut Tensor>, grads: Vec<&Tensor>) {
        if self.m.is_empty() {
            self.m = grads.iter().map(|g| vec![0.0; g.len()]).collect();
            self.v = self.m.clone();
        }
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for (k, (p, g)) in params.into_iter().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..p.data.len() {
                let gi = g.data[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * gi;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * gi * gi;
                let upd = self.lr * (m[i] / bc1) / ((v[i] / bc2).sqrt() + self.eps);
                let mut x = p.data[i] - upd;
                if self.round_f32 {
                    x = (x as f32) as f64;
                }
                p.data[i] = x;
            }
        }
    }
}
