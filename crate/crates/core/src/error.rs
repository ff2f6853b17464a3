use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("shape mismatch in {layer}: expected {expected}, got {actual}")]
    ShapeMismatch {
        layer: String,
        expected: String,
        actual: String,
    },

    #[error("numeric overflow in layer {0}")]
    NumericOverflow(String),

    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),

    #[error("infeasible budget: pruning every layer at s_max leaves {min_flops} FLOPs, budget allows {max_flops}")]
    InfeasibleBudget { min_flops: u64, max_flops: f64 },

    #[error("non-finite loss at iteration {0}")]
    NonFiniteLoss(usize),

    #[error("non-monotonic clock: {now} < {last}")]
    NonMonotonicClock { now: i64, last: i64 },

    #[error("unexpected event in phase {phase}: {event}")]
    UnexpectedEvent { phase: String, event: String },

    #[error("model file: {0}")]
    ModelFile(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_err(
    layer: &str,
    expected: impl std::fmt::Debug,
    actual: impl std::fmt::Debug,
) -> Error {
    Error::ShapeMismatch {
        layer: layer.to_string(),
        expected: format!("{expected:?}"),
        actual: format!("{actual:?}"),
    }
}
