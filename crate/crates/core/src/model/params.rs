use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::layers::{Conv1d, Dense, Lstm, SelfAttention, SqueezeExcite};
use super::spec::{ConvSpec, ModelSpec};
use super::tensor::Tensor;
use crate::error::{shape_err, Result};

/// Current parameter layout version, written into model files.
pub const PARAMS_VERSION: u32 = 1;

/// Weights of the hybrid classifier plus the (non-trainable) feature
/// standardization fitted on the training set.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub spec: ModelSpec,
    pub version: u32,
    /// Subtracted from raw features, `[feature_dim]`.
    pub norm_mean: Tensor,
    /// Multiplied after centering, `[feature_dim]`.
    pub norm_scale: Tensor,
    pub convs: Vec<Conv1d>,
    pub se: SqueezeExcite,
    pub attention: SelfAttention,
    pub lstm: Lstm,
    /// Hidden layers followed by the classification layer.
    pub dense: Vec<Dense>,
}

impl ModelParams {
    /// All-zero parameters with identity normalization.
    pub fn zeros(spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        let mut convs = Vec::new();
        let mut cin = 1;
        for &ConvSpec { kernel, filters } in &spec.conv_layers {
            convs.push(Conv1d::zeros(cin, filters, kernel));
            cin = filters;
        }
        let mut dense = Vec::new();
        let mut din = spec.activation_dim();
        for &w in spec
            .dense_layers
            .iter()
            .chain(std::iter::once(&spec.num_classes))
        {
            dense.push(Dense::zeros(din, w));
            din = w;
        }
        Ok(Self {
            spec: spec.clone(),
            version: PARAMS_VERSION,
            norm_mean: Tensor::zeros(&[spec.feature_dim]),
            norm_scale: Tensor::filled(&[spec.feature_dim], 1.0),
            convs,
            se: SqueezeExcite::zeros(spec.cnn_out_dim(), spec.se_hidden),
            attention: SelfAttention::zeros(1, spec.attention_dim),
            lstm: Lstm::zeros(spec.attention_dim, spec.lstm_cells),
            dense,
        })
    }

    /// Seeded uniform fan-in initialization: each weight is drawn from
    /// `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`, biases start at zero except the
    /// LSTM forget gate (1.0).
    pub fn init(spec: &ModelSpec, seed: u64) -> Result<Self> {
        let mut p = Self::zeros(spec)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = |fan_in: usize| 1.0 / (fan_in.max(1) as f64).sqrt();
        for c in &mut p.convs {
            let fan = c.in_channels() * c.kernel();
            c.weight = Tensor::uniform(&c.weight.shape, bound(fan), &mut rng);
        }
        p.se.w1 = Tensor::uniform(&p.se.w1.shape, bound(p.se.channels()), &mut rng);
        p.se.w2 = Tensor::uniform(&p.se.w2.shape, bound(p.se.hidden()), &mut rng);
        let a = &mut p.attention;
        a.wq = Tensor::uniform(&a.wq.shape, 1.0, &mut rng);
        a.wk = Tensor::uniform(&a.wk.shape, 1.0, &mut rng);
        a.wv = Tensor::uniform(&a.wv.shape, 1.0, &mut rng);
        let n = spec.lstm_cells;
        let b = bound(spec.attention_dim + n);
        p.lstm.w_ih = Tensor::uniform(&p.lstm.w_ih.shape, b, &mut rng);
        p.lstm.w_hh = Tensor::uniform(&p.lstm.w_hh.shape, b, &mut rng);
        p.lstm.b.data[n..2 * n].fill(1.0);
        for d in &mut p.dense {
            d.weight = Tensor::uniform(&d.weight.shape, bound(d.input_dim()), &mut rng);
        }
        Ok(p)
    }

    /// Trainable tensors in a fixed order, with stable names.
    pub fn named_trainable(&self) -> Vec<(String, &Tensor)> {
        let mut out: Vec<(String, &Tensor)> = Vec::new();
        for (i, c) in self.convs.iter().enumerate() {
            out.push((format!("conv{i}.weight"), &c.weight));
            out.push((format!("conv{i}.bias"), &c.bias));
        }
        out.push(("se.w1".into(), &self.se.w1));
        out.push(("se.b1".into(), &self.se.b1));
        out.push(("se.w2".into(), &self.se.w2));
        out.push(("se.b2".into(), &self.se.b2));
        let a = &self.attention;
        for (n, t) in [
            ("wq", &a.wq),
            ("bq", &a.bq),
            ("wk", &a.wk),
            ("bk", &a.bk),
            ("wv", &a.wv),
            ("bv", &a.bv),
        ] {
            out.push((format!("attention.{n}"), t));
        }
        out.push(("lstm.w_ih".into(), &self.lstm.w_ih));
        out.push(("lstm.w_hh".into(), &self.lstm.w_hh));
        out.push(("lstm.b".into(), &self.lstm.b));
        for (i, d) in self.dense.iter().enumerate() {
            out.push((format!("dense{i}.weight"), &d.weight));
            out.push((format!("dense{i}.bias"), &d.bias));
        }
        out
    }

    /// Same order as [`Self::named_trainable`].
    pub fn trainable_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = self.all_mut();
        out.drain(..2);
        out
    }

    /// Every stored tensor: normalization first, then trainables.
    pub fn named_all(&self) -> Vec<(String, &Tensor)> {
        let mut out = vec![
            ("norm.mean".to_string(), &self.norm_mean),
            ("norm.scale".to_string(), &self.norm_scale),
        ];
        out.extend(self.named_trainable());
        out
    }

    pub fn all_mut(&mut self) -> Vec<&mut Tensor> {
        let Self {
            norm_mean,
            norm_scale,
            convs,
            se,
            attention: a,
            lstm,
            dense,
            ..
        } = self;
        let mut out: Vec<&mut Tensor> = vec![norm_mean, norm_scale];
        for c in convs {
            out.push(&mut c.weight);
            out.push(&mut c.bias);
        }
        out.extend([&mut se.w1, &mut se.b1, &mut se.w2, &mut se.b2]);
        out.extend([
            &mut a.wq, &mut a.bq, &mut a.wk, &mut a.bk, &mut a.wv, &mut a.bv,
        ]);
        out.extend([&mut lstm.w_ih, &mut lstm.w_hh, &mut lstm.b]);
        for d in dense {
            out.push(&mut d.weight);
            out.push(&mut d.bias);
        }
        out
    }

    /// Zeroed gradient container matching this parameter set.
    pub fn zeros_like(&self) -> Self {
        let mut g = self.clone();
        for t in g.all_mut() {
            t.fill(0.0);
        }
        g
    }

    pub fn num_trainable(&self) -> usize {
        self.named_trainable().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.named_all().iter().all(|(_, t)| t.is_finite())
    }

    /// Checks every tensor against the shapes implied by `spec`.
    pub fn check_shapes(&self) -> Result<()> {
        let reference = Self::zeros(&self.spec)?;
        for ((name, a), (_, b)) in self.named_all().into_iter().zip(reference.named_all()) {
            if a.shape != b.shape {
                return Err(shape_err(&name, &b.shape, &a.shape));
            }
        }
        if self.dense.len() != reference.dense.len() || self.convs.len() != reference.convs.len() {
            return Err(shape_err(
                "layers",
                reference.named_all().len(),
                self.named_all().len(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ModelSpec {
        ModelSpec::builder(6)
            .conv(&[(3, 2), (5, 3)])
            .build_with(2, 3, &[4], 3, 2)
    }

    #[test]
    fn init_is_deterministic_and_f32_exact() {
        let a = ModelParams::init(&tiny(), 3).unwrap();
        let b = ModelParams::init(&tiny(), 3).unwrap();
        assert_eq!(a, b);
        for (_, t) in a.named_all() {
            assert!(t.data.iter().all(|&v| (v as f32) as f64 == v));
        }
        a.check_shapes().unwrap();
        assert_ne!(a, ModelParams::init(&tiny(), 4).unwrap());
    }

    #[test]
    fn names_align_with_mutable_view() {
        let mut p = ModelParams::init(&tiny(), 1).unwrap();
        let shapes: Vec<Vec<usize>> = p
            .named_trainable()
            .iter()
            .map(|(_, t)| t.shape.clone())
            .collect();
        let shapes_mut: Vec<Vec<usize>> =
            p.trainable_mut().iter().map(|t| t.shape.clone()).collect();
        assert_eq!(shapes, shapes_mut);
    }
}
