use crate::error::{Error, Result};

/// FLOPs allowance for a compressed model: `alpha` of the baseline count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressionBudget {
    pub alpha: f64,
    pub baseline_flops: u64,
}

impl CompressionBudget {
    pub fn new(alpha: f64, baseline_flops: u64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        let b = Self {
            alpha,
            baseline_flops,
        };
        if b.max_flops() < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "budget of {} FLOPs is below 1",
                b.max_flops()
            )));
        }
        Ok(b)
    }

    pub fn max_flops(&self) -> f64 {
        self.alpha * self.baseline_flops as f64
    }

    pub fn allows(&self, flops: u64) -> bool {
        flops as f64 <= self.max_flops()
    }
}
