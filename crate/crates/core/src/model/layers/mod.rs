//! Differentiable building blocks. Each layer owns its parameters, computes a
//! forward pass that records what the backward pass needs, and accumulates
//! parameter gradients into a same-shaped gradient layer.

mod attention;
mod conv;
mod dense;
mod lstm;
mod se;

pub use attention::{AttentionCache, SelfAttention};
pub use conv::Conv1d;
pub use dense::Dense;
pub use lstm::{Lstm, LstmCache};
pub use se::{SeCache, SqueezeExcite};
