//! Equivalent sample size (ESS) of a fixed prediction rule.
//!
//! The ESS of a fixed rule against a learning algorithm is the smallest
//! training-set size at which the algorithm's expected risk weakly undercuts
//! the rule's risk. This crate estimates the algorithm's risk curve with
//! block-out cross-validation, studentizes it with asymptotic variance
//! estimators for both the fixed-training-size and fixed-block-count
//! regimes, and turns an ordered sequence of one-sided tests into a
//! one-sided confidence interval `[N̂, ∞)` for the ESS.
//!
//! Module map:
//!
//! - [`data`], [`loss`]: datasets, outcome typing, losses and report metrics
//! - [`risk`]: block partitions, block-out CV, fixed-rule risk, difference loss
//! - [`variance`]: fixed-N and fixed-B variance estimators, regime selection
//! - [`inference`], [`report`]: per-size tests, the sequential procedure, curves
//! - [`learners`]: comparator algorithms with preprocessing and per-N tuning
//! - [`cate`]: treatment-arm and transformed-outcome CATE variants
//! - [`simulate`]: Monte Carlo validation harness

pub mod cate;
pub mod data;
pub mod error;
pub mod inference;
pub mod learners;
pub mod loss;
pub mod report;
pub mod risk;
pub mod rule;
pub mod seeds;
pub mod simulate;
pub mod variance;

pub use data::{Dataset, DatasetBuilder, OutcomeType, Role, Target, Vocabulary};
pub use error::{EssError, Result};
pub use inference::{
    plugin_ess, sequential_ess, error_curve, test_step, EssConfig, PluginEss, SequentialResult,
    StepResult, TrainingGrid,
};
pub use learners::{Family, Hyperparameters, Learner, LearnerSpec};
pub use loss::{aggregate_metrics, evaluate_loss, LossKind, Outcome, RiskEstimate};
pub use risk::{block_out_cv, fixed_rule_risk, partition_blocks, BlockCvResult, BlockPartition};
pub use rule::{PredictionRule, Provenance};
pub use variance::{select_regime, Regime, VarianceEstimate, VarianceMode};

/// Tool version embedded in every result artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
