use serde::Serialize;

use super::spec::ModelSpec;

/// FLOPs of one window's forward pass. A multiply-add counts as two; bias
/// adds, elementwise products, divisions and subtractions count one each;
/// nonlinearities (ReLU, sigmoid, tanh, exp, max) are free.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlopsReport {
    pub layers: Vec<LayerFlops>,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayerFlops {
    pub name: String,
    pub flops: u64,
}

impl FlopsReport {
    pub fn layer(&self, name: &str) -> Option<u64> {
        self.layers.iter().find(|l| l.name == name).map(|l| l.flops)
    }
}

/// Number of (output position, tap) pairs that read an in-range sample under
/// same-padding.
pub fn valid_taps(len: usize, kernel: usize) -> u64 {
    let pad = kernel / 2;
    (0..len)
        .map(|t| {
            let lo = t.saturating_sub(pad);
            let hi = (t + pad).min(len - 1);
            (hi - lo + 1) as u64
        })
        .sum()
}

pub fn conv_flops(len: usize, cin: usize, cout: usize, kernel: usize) -> u64 {
    2 * (cout * cin) as u64 * valid_taps(len, kernel) + (cout * len) as u64
}

pub fn dense_flops(input: usize, output: usize) -> u64 {
    (2 * input * output + output) as u64
}

pub fn count_flops(spec: &ModelSpec) -> FlopsReport {
    let len = spec.input_dim();
    let l = len as u64;
    let mut layers = Vec::new();
    let mut push = |name: String, flops: u64| layers.push(LayerFlops { name, flops });

    push("normalize".into(), 2 * spec.feature_dim as u64);
    let mut cin = 1;
    for (i, c) in spec.conv_layers.iter().enumerate() {
        push(
            format!("conv{i}"),
            conv_flops(len, cin, c.filters, c.kernel),
        );
        cin = c.filters;
    }
    let ch = spec.cnn_out_dim() as u64;
    let hid = spec.se_hidden as u64;
    push(
        "squeeze_excite".into(),
        ch * (l + 1)
            + dense_flops(ch as usize, hid as usize)
            + dense_flops(hid as usize, ch as usize)
            + ch * l,
    );
    push("avg_pool".into(), ch * (l + 1));

    let d = spec.attention_dim as u64;
    let token_dim = 1u64;
    let projections = 3 * l * (2 * token_dim * d + d);
    let scores = l * l * (2 * d + 1);
    let softmax = 3 * l * l;
    let mix = l * l * 2 * d;
    push(
        "self_attention".into(),
        projections + scores + softmax + mix,
    );

    let h = spec.lstm_cells as u64;
    let per_step = 4 * h * (2 * d + 2 * h) + 4 * h + 3 * h + h;
    push("lstm".into(), l * per_step);

    let mut din = spec.activation_dim();
    for (i, &w) in spec
        .dense_layers
        .iter()
        .chain(std::iter::once(&spec.num_classes))
        .enumerate()
    {
        push(format!("dense{i}"), dense_flops(din, w));
        din = w;
    }
    push("softmax".into(), 3 * spec.num_classes as u64);

    let total = layers.iter().map(|l| l.flops).sum();
    FlopsReport { layers, total }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_closed_form() {
        assert_eq!(dense_flops(10, 10), 210);
    }

    #[test]
    fn valid_taps_by_hand() {
        // len 4, kernel 3: edges see 2 taps, interior 3.
        assert_eq!(valid_taps(4, 3), 2 + 3 + 3 + 2);
        // kernel wider than the sequence: every pair is valid.
        assert_eq!(valid_taps(2, 7), 4);
        assert_eq!(valid_taps(5, 1), 5);
    }

    #[test]
    fn conv_flops_linear_in_filters() {
        assert_eq!(conv_flops(40, 3, 128, 5), 2 * conv_flops(40, 3, 64, 5));
        // the first conv's input length grows with the activation it feeds back
        let spec = |f: usize| {
            ModelSpec::builder(20)
                .conv(&[(3, 4), (3, f)])
                .build_with(4, 4, &[8], 10, 4)
        };
        let a = count_flops(&spec(8)).layer("conv0").unwrap();
        let b = count_flops(&spec(4)).layer("conv0").unwrap();
        assert!(a > b);
    }

    #[test]
    fn total_is_sum_of_layers() {
        let r = count_flops(&ModelSpec::full_size(81));
        assert_eq!(r.total, r.layers.iter().map(|l| l.flops).sum::<u64>());
        assert!(r.layer("conv2").unwrap() > r.layer("conv1").unwrap());
    }
}
