use super::series::{Sample, SampleSeries, NUM_CHANNELS};
use crate::error::{Error, Result};

/// Low-pass FIR taps with unit DC gain and odd length.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpec {
    taps: Vec<f64>,
}

impl FilterSpec {
    pub fn new(taps: Vec<f64>) -> Result<Self> {
        if taps.is_empty() || taps.len() % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "filter needs an odd, non-zero number of taps, got {}",
                taps.len()
            )));
        }
        let sum: f64 = taps.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "filter taps sum to {sum}, expected 1"
            )));
        }
        Ok(Self { taps })
    }

    pub fn moving_average(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("moving average of zero taps".into()));
        }
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn identity() -> Self {
        Self { taps: vec![1.0] }
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }
}

/// Mirror an out-of-range index back into `0..n` without repeating the edge
/// sample (`-1 -> 1`, `n -> n - 2`).
fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Convolve every channel with the taps, reflect-padding both ends so the
/// output has the input's length. Timestamps pass through untouched.
pub fn fir_filter(series: &SampleSeries, spec: &FilterSpec) -> Result<SampleSeries> {
    if series.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = series.len();
    let taps = spec.taps();
    let half = (taps.len() / 2) as isize;
    let rows: Vec<[f64; NUM_CHANNELS]> = series.samples().iter().map(Sample::channels).collect();

    let samples = series
        .samples()
        .iter()
        .enumerate()
        .map(|(t, s)| {
            let mut out = [0.0; NUM_CHANNELS];
            for (j, &h) in taps.iter().enumerate() {
                let src = reflect(t as isize + half - j as isize, n);
                for (o, v) in out.iter_mut().zip(rows[src].iter()) {
                    *o += h * v;
                }
            }
            Sample::from_channels(s.t_ns, out)
        })
        .collect();
    Ok(series.with_samples(samples))
}
