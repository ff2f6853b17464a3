//! Reproduction harness: synthetic sessions, evaluation protocols, the
//! budget sweep, latency measurement, configuration and the command line.

pub mod cli;
mod config;
mod eval;
mod latency;
mod metrics;
mod report;
mod sweep;
mod synth;

pub use config::{CompressConfig, EvalConfig, HarnessConfig, ModelConfig, SweepConfig};
pub use eval::{
    featurize, lopo, lopo_folds, predict_steps, prepare, run_folds, test_on, train_on,
    user_dependent_eval, user_dependent_folds, EvalReport, Fold, FoldReport, PreparedSession,
};
pub use latency::{event_from_series, measure_latency, paired_latency};
pub use metrics::{percentile, step_accuracy, LatencyStats, StepAccuracy, LABELS};
pub use report::{summary, write_confusion_csv, write_fold_csv, write_step_csv, write_sweep_csv};
pub use sweep::{alpha_sweep, compress_model, split_validation, SweepReport, SweepRow};
pub use synth::{
    generate, motif_table, pearson, render_motif, Component, Dataset, MotifTable, Session,
    SyntheticSpec,
};
