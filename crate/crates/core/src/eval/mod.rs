//! Cross-validation harness, metrics and synthetic corpora.

pub mod experiment;
pub mod folds;
pub mod metrics;
pub mod synth;

pub use experiment::{run_experiment, train_model, ExperimentConfig, ExperimentReport, FoldReport, TrainedModel, Variant};
pub use folds::{kfold_split, rebalance};
pub use metrics::{ConfusionMatrix, Metrics, Scores};
pub use synth::{generate, SyntheticConfig, SyntheticCorpus};
