use serde::{Deserialize, Serialize};

use super::series::NUM_CHANNELS;
use super::window::Window;
use crate::error::{Error, Result};

/// mean, std, kurtosis, skew
pub const STAT_COUNT: usize = 4;

/// Per channel: `[mean, std, kurtosis, skew, ecdf_1..ecdf_k]`, channels in
/// accel/gyro/mag xyz order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub channels: usize,
    pub ecdf_points: usize,
}

impl FeatureLayout {
    pub fn new(ecdf_points: usize) -> Self {
        Self {
            channels: NUM_CHANNELS,
            ecdf_points,
        }
    }

    pub fn per_channel(&self) -> usize {
        STAT_COUNT + self.ecdf_points
    }

    pub fn len(&self) -> usize {
        self.channels * self.per_channel()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, channel: usize, slot: usize) -> usize {
        channel * self.per_channel() + slot
    }

    pub fn names(&self) -> Vec<String> {
        const CH: [&str; NUM_CHANNELS] = ["ax", "ay", "az", "gx", "gy", "gz", "mx", "my", "mz"];
        let mut out = Vec::with_capacity(self.len());
        for ch in CH.iter().take(self.channels) {
            for stat in ["mean", "std", "kurtosis", "skew"] {
                out.push(format!("{ch}_{stat}"));
            }
            for i in 1..=self.ecdf_points {
                out.push(format!("{ch}_ecdf{i}"));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub layout: FeatureLayout,
}

fn moments(x: &[f64]) -> [f64; STAT_COUNT] {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    // Rounding noise on a constant channel must not turn into kurtosis.
    let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if m2 <= (1e-12 * scale).powi(2) {
        return [mean, 0.0, 0.0, 0.0];
    }
    let std = m2.sqrt();
    [mean, std, m4 / (m2 * m2) - 3.0, m3 / (m2 * std)]
}

/// Population mean and std, Fisher excess kurtosis and Fisher-Pearson skew
/// per channel. Constant channels report zero std/kurtosis/skew.
pub fn stat_features(window: &Window) -> [[f64; STAT_COUNT]; NUM_CHANNELS] {
    std::array::from_fn(|c| moments(&window.channels[c]))
}

/// Inverse ECDF of one channel at `p_i = (i - 0.5) / k`: the order statistic
/// `x_(j)` with `j = ceil(p_i * n)`.
fn ecdf_channel(x: &[f64], k: usize) -> Vec<f64> {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    (1..=k)
        .map(|i| {
            // ceil((2i - 1) n / 2k) in integers
            let num = (2 * i - 1) * n;
            let j = num.div_ceil(2 * k).max(1);
            sorted[j - 1]
        })
        .collect()
}

pub fn ecdf_features(window: &Window, k: usize) -> Result<Vec<Vec<f64>>> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "ECDF needs at least one point".into(),
        ));
    }
    Ok(window.channels.iter().map(|c| ecdf_channel(c, k)).collect())
}

pub fn feature_vector(window: &Window, k: usize) -> Result<FeatureVector> {
    let layout = FeatureLayout::new(k);
    let stats = stat_features(window);
    let ecdf = ecdf_features(window, k)?;
    let mut values = Vec::with_capacity(layout.len());
    for (s, e) in stats.iter().zip(&ecdf) {
        values.extend_from_slice(s);
        values.extend_from_slice(e);
    }
    Ok(FeatureVector { values, layout })
}
