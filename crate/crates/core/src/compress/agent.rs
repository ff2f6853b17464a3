use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::embed::LayerEmbedding;
use crate::error::{Error, Result};
use crate::model::layers::Dense;
use crate::model::Tensor;
use crate::optim::Adam;

pub const AGENT_HIDDEN: usize = 300;

/// Actor (embedding → sparsity) and critic (sparsity vector → predicted
/// validation loss), each with two ReLU hidden layers.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentParams {
    pub actor: Vec<Dense>,
    pub critic: Vec<Dense>,
}

struct Pass {
    /// Inputs to each layer, then the final pre-activation output.
    inputs: Vec<Vec<f64>>,
    out: f64,
}

fn mlp(layers: &[Dense], x: &[f64]) -> Pass {
    let mut inputs = vec![x.to_vec()];
    let mut cur = x.to_vec();
    for (i, l) in layers.iter().enumerate() {
        let mut y = l
            .forward(&cur)
            .expect("agent dimensions are fixed at construction");
        if i + 1 < layers.len() {
            y.iter_mut().for_each(|v| *v = v.max(0.0));
            inputs.push(y.clone());
        }
        cur = y;
    }
    Pass {
        inputs,
        out: cur[0],
    }
}

/// Accumulates weight gradients into `grad`; returns the input gradient.
fn mlp_backward(layers: &[Dense], pass: &Pass, d_out: f64, grad: &mut [Dense]) -> Vec<f64> {
    let mut dy = vec![d_out];
    for i in (0..layers.len()).rev() {
        let dx = layers[i].backward(&pass.inputs[i], &dy, &mut grad[i]);
        if i == 0 {
            return dx;
        }
        dy = dx
            .into_iter()
            .zip(&pass.inputs[i])
            .map(|(g, &a)| if a > 0.0 { g } else { 0.0 })
            .collect();
    }
    dy
}

fn mlp_shapes(input: usize, hidden: usize) -> Vec<Dense> {
    vec![
        Dense::zeros(input, hidden),
        Dense::zeros(hidden, hidden),
        Dense::zeros(hidden, 1),
    ]
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl AgentParams {
    pub fn zeros(num_layers: usize, hidden: usize) -> Self {
        Self {
            actor: mlp_shapes(LayerEmbedding::DIM, hidden),
            critic: mlp_shapes(num_layers, hidden),
        }
    }

    /// Seeded fan-in uniform weights, zero biases.
    pub fn init(num_layers: usize, hidden: usize, seed: u64) -> Self {
        let mut a = Self::zeros(num_layers, hidden);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for d in a.actor.iter_mut().chain(a.critic.iter_mut()) {
            let bound = 1.0 / (d.input_dim() as f64).sqrt();
            d.weight = Tensor::uniform(&d.weight.shape, bound, &mut rng);
        }
        a
    }

    /// Unclipped sigmoid output of the actor.
    pub fn actor_raw(&self, e: &LayerEmbedding) -> f64 {
        sigmoid(mlp(&self.actor, &e.to_array()).out)
    }

    /// Sparsity proposal clipped to `[0, s_max]`.
    pub fn actor_forward(&self, e: &LayerEmbedding, s_max: f64) -> f64 {
        self.actor_raw(e).clamp(0.0, s_max)
    }

    pub fn critic_forward(&self, s: &[f64]) -> f64 {
        mlp(&self.critic, s).out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        self.actor
            .iter_mut()
            .chain(self.critic.iter_mut())
            .flat_map(|d| [&mut d.weight, &mut d.bias])
            .collect()
    }

    fn tensors(&self) -> Vec<&Tensor> {
        self.actor
            .iter()
            .chain(self.critic.iter())
            .flat_map(|d| [&d.weight, &d.bias])
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }

    /// Gradient of the compression loss for one candidate, with respect to
    /// critic and actor weights. `passes[i]` says whether the executed
    /// sparsity `s[i]` moves with the actor output for layer `i`.
    fn loss_grad(
        &self,
        embeddings: &[LayerEmbedding],
        passes: &[bool],
        s: &[f64],
        y: f64,
        flops: f64,
    ) -> Result<(f64, AgentParams)> {
        let mut grad = Self::zeros(s.len(), self.actor[0].output_dim());
        let critic = mlp(&self.critic, s);
        let loss = compression_loss(&[y], &[critic.out], flops)?;
        let d_pred = 2.0 * (critic.out - y) * flops.ln();
        let ds = mlp_backward(&self.critic, &critic, d_pred, &mut grad.critic);
        for ((e, &pass), &g) in embeddings.iter().zip(passes).zip(&ds) {
            if !pass {
                continue;
            }
            let actor = mlp(&self.actor, &e.to_array());
            let a = sigmoid(actor.out);
            mlp_backward(&self.actor, &actor, g * a * (1.0 - a), &mut grad.actor);
        }
        Ok((loss, grad))
    }

    /// One Adam step on the compression loss. Returns the loss before the step.
    pub fn update(
        &mut self,
        opt: &mut Adam,
        embeddings: &[LayerEmbedding],
        passes: &[bool],
        s: &[f64],
        y: f64,
        flops: f64,
    ) -> Result<f64> {
        let (loss, grad) = self.loss_grad(embeddings, passes, s, y, flops)?;
        opt.step(self.tensors_mut(), grad.tensors());
        Ok(loss)
    }
}

/// Mean squared error between target and critic output, times the natural
/// log of the candidate's FLOPs.
pub fn compression_loss(y: &[f64], critic_out: &[f64], total_flops: f64) -> Result<f64> {
    if !(total_flops >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "total FLOPs {total_flops} below 1"
        )));
    }
    if y.len() != critic_out.len() || y.is_empty() {
        return Err(Error::InvalidArgument(
            "target and critic output lengths differ".into(),
        ));
    }
    let mse = y
        .iter()
        .zip(critic_out)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / y.len() as f64;
    Ok(mse * total_flops.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn emb(v: [f64; 5]) -> LayerEmbedding {
        LayerEmbedding {
            layer_index: v[0],
            kind: v[1],
            layer_flops: v[2],
            reduced_so_far: v[3],
            remaining_after: v[4],
        }
    }

    /// Plain nested-loop network: ReLU hidden layers, linear output.
    fn oracle(layers: &[Dense], x: &[f64]) -> f64 {
        let mut cur = x.to_vec();
        for (li, l) in layers.iter().enumerate() {
            let (rows, cols) = (l.weight.shape[0], l.weight.shape[1]);
            let mut next = vec![0.0; rows];
            for r in 0..rows {
                let mut acc = l.bias.data[r];
                for c in 0..cols {
                    acc += l.weight.data[r * cols + c] * cur[c];
                }
                next[r] = if li + 1 < layers.len() {
                    acc.max(0.0)
                } else {
                    acc
                };
            }
            cur = next;
        }
        cur[0]
    }

    #[test]
    fn zero_actor_proposes_half() {
        let a = AgentParams::zeros(3, 300);
        assert_eq!(a.actor_forward(&emb([0.3, 0.5, 0.1, 0.2, 0.4]), 0.8), 0.5);
    }

    #[test]
    fn actor_matches_oracle() {
        let a = AgentParams::init(4, 300, 17);
        let e = emb([0.25, 1.0, 0.3, 0.1, 0.05]);
        let want = 1.0 / (1.0 + (-oracle(&a.actor, &e.to_array())).exp());
        assert!((a.actor_raw(&e) - want).abs() < 1e-6);
        let s = [0.1, 0.2, 0.7, 0.4];
        assert!((a.critic_forward(&s) - oracle(&a.critic, &s)).abs() < 1e-6);
    }

    #[test]
    fn actor_output_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut a = AgentParams::init(3, 300, 2);
        // push the output layer hard in both directions
        a.actor[2].bias.data[0] = 3.0;
        for _ in 0..10_000 {
            let e = emb([(); 5].map(|_| rng.gen_range(-5.0..5.0)));
            let s = a.actor_forward(&e, 0.8);
            assert!((0.0..=0.8).contains(&s));
        }
    }

    #[test]
    fn loss_examples() {
        assert_eq!(compression_loss(&[0.7], &[0.7], 1e9).unwrap(), 0.0);
        assert!(
            (compression_loss(&[1.0], &[0.0], std::f64::consts::E).unwrap() - 1.0).abs() < 1e-12
        );
        assert!((compression_loss(&[0.5], &[0.0], 1e6).unwrap() - 3.4539).abs() < 1e-4);
        assert!(compression_loss(&[0.5], &[0.0], 0.5).is_err());
    }

    #[test]
    fn agent_gradients_match_finite_differences() {
        let agent = AgentParams::init(3, 6, 4);
        let embeddings = [
            emb([0.0, 0.0, 0.3, 0.0, 0.5]),
            emb([0.5, 0.5, 0.4, 0.1, 0.1]),
            emb([1.0, 1.0, 0.1, 0.4, 0.0]),
        ];
        let passes = [true, true, false];
        let (y, flops) = (0.9, 5000.0);
        // executed sparsity follows the actor output where the pass flag is set
        let total = |a: &AgentParams| {
            let s: Vec<f64> = embeddings
                .iter()
                .zip(&passes)
                .map(|(e, &p)| if p { a.actor_raw(e) } else { 0.3 })
                .collect();
            compression_loss(&[y], &[a.critic_forward(&s)], flops).unwrap()
        };
        let s: Vec<f64> = embeddings
            .iter()
            .zip(&passes)
            .map(|(e, &p)| if p { agent.actor_raw(e) } else { 0.3 })
            .collect();
        let (_, grad) = agent.loss_grad(&embeddings, &passes, &s, y, flops).unwrap();
        let analytic: Vec<f64> = grad.tensors().iter().flat_map(|t| t.data.clone()).collect();
        let mut probe = agent.clone();
        let mut k = 0;
        let count = probe.tensors_mut().len();
        for ti in 0..count {
            for e in 0..probe.tensors_mut()[ti].data.len() {
                let orig = probe.tensors_mut()[ti].data[e];
                probe.tensors_mut()[ti].data[e] = orig + 1e-5;
                let up = total(&probe);
                probe.tensors_mut()[ti].data[e] = orig - 1e-5;
                let down = total(&probe);
                probe.tensors_mut()[ti].data[e] = orig;
                let num = (up - down) / 2e-5;
                assert!(
                    (num - analytic[k]).abs() < 1e-6 + 1e-4 * num.abs(),
                    "tensor {ti} elem {e}: {num} vs {}",
                    analytic[k]
                );
                k += 1;
            }
        }
    }

    #[test]
    fn update_reduces_critic_error() {
        let mut agent = AgentParams::init(2, 16, 9);
        let mut opt = Adam::new(1e-2);
        let e = [
            emb([0.0, 0.0, 0.5, 0.0, 0.2]),
            emb([1.0, 0.5, 0.2, 0.1, 0.0]),
        ];
        let s = [0.4, 0.6];
        let first = agent
            .update(&mut opt, &e, &[false, false], &s, 1.5, 1000.0)
            .unwrap();
        let mut last = first;
        for _ in 0..50 {
            last = agent
                .update(&mut opt, &e, &[false, false], &s, 1.5, 1000.0)
                .unwrap();
        }
        assert!(last < first * 0.1);
    }

    proptest! {
        #[test]
        fn loss_is_multiplicative_in_mse(y in -3.0f64..3.0, c in -3.0f64..3.0, k in 0.0f64..10.0, f in 1.0f64..1e9) {
            let base = compression_loss(&[y], &[c], f).unwrap();
            let d = (y - c) * k.sqrt();
            let scaled = compression_loss(&[d], &[0.0], f).unwrap();
            prop_assert!((scaled - k * base).abs() <= 1e-9 * (1.0 + scaled.abs()));
        }
    }
}
