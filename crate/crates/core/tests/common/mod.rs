#![allow(dead_code)]

pub mod oracle;
pub mod scripts;

use handwash::model::{ModelParams, ModelSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small architecture with every layer kind present.
pub fn tiny_spec() -> ModelSpec {
    ModelSpec::builder(5)
        .conv(&[(3, 2), (5, 3)])
        .build_with(2, 3, &[4], 3, 2)
}

/// Random spec with every dimension in `1..=8` (odd kernels).
pub fn random_spec(rng: &mut ChaCha8Rng) -> ModelSpec {
    let convs: Vec<(usize, usize)> = (0..rng.gen_range(1..=3))
        .map(|_| (2 * rng.gen_range(0..4) + 1, rng.gen_range(1..=8)))
        .collect();
    let dense: Vec<usize> = (0..rng.gen_range(0..=3))
        .map(|_| rng.gen_range(1..=8))
        .collect();
    let last = convs.last().unwrap().1;
    let mut spec = ModelSpec::builder(rng.gen_range(1..=8))
        .conv(&convs)
        .build_with(
            rng.gen_range(1..=8),
            rng.gen_range(1..=8),
            &dense,
            rng.gen_range(2..=8),
            1,
        );
    spec.se_hidden = rng.gen_range(1..=last.max(1)).min(8);
    spec
}

/// Parameters with every tensor (including biases and normalization) random.
pub fn random_params(spec: &ModelSpec, seed: u64) -> ModelParams {
    let mut p = ModelParams::zeros(spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in p.all_mut() {
        for v in t.data.iter_mut() {
            *v = rng.gen_range(-0.8..0.8);
        }
    }
    for v in p.norm_scale.data.iter_mut() {
        *v = rng.gen_range(0.5..1.5);
    }
    p
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

/// Sequences whose windows cluster around a per-class centre in feature space.
pub fn clustered_sequences(
    seed: u64,
    classes: usize,
    dim: usize,
    count: usize,
    windows: usize,
) -> Vec<handwash::model::LabeledSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centre_rng = ChaCha8Rng::seed_from_u64(999);
    let centres: Vec<Vec<f64>> = (0..classes)
        .map(|_| random_vec(&mut centre_rng, dim, 2.0))
        .collect();
    (0..count)
        .map(|i| {
            let labels: Vec<Option<usize>> =
                (0..windows).map(|w| Some((i + w) % classes)).collect();
            let features = labels
                .iter()
                .map(|l| {
                    centres[l.unwrap()]
                        .iter()
                        .map(|c| c + rng.gen_range(-0.5..0.5))
                        .collect()
                })
                .collect();
            handwash::model::LabeledSequence { features, labels }
        })
        .collect()
}
