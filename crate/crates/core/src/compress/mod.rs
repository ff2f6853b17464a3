//! Budget-constrained structured pruning: an actor proposes a sparsity per
//! prunable layer from a layer embedding, a critic learns to predict the
//! resulting validation loss, and the best candidate under the FLOPs budget
//! is kept.

mod agent;
mod budget;
mod embed;
mod prune;
mod search;

pub use agent::{compression_loss, AgentParams, AGENT_HIDDEN};
pub use budget::CompressionBudget;
pub use embed::{layer_embedding, LayerEmbedding};
pub use prune::{
    prunable_layers, prune_all, prune_layer, prune_spec, pruned_flops, pruned_spec, removed_units,
    LayerKind, PrunableLayer, SparsityVector,
};
pub use search::{
    candidate_loss, evaluate, finalize, search, search_with_agent, write_trace_csv, SearchConfig,
    SearchResult, TraceRow, TRACE_HEADER,
};
