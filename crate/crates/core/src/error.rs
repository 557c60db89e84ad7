use thiserror::Error;

use crate::inference::StepResult;

pub type Result<T> = std::result::Result<T, EssError>;

#[derive(Debug, Error)]
pub enum EssError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training size N={train_size} is infeasible for n={n}: at least two blocks are required (N <= n/2)")]
    GridInfeasible { train_size: usize, n: usize },

    #[error("insufficient blocks: B={blocks}, at least 2 are required")]
    InsufficientBlocks { blocks: usize },

    #[error("training failed on block {block} at N={train_size}: {source}")]
    BlockTraining {
        block: usize,
        train_size: usize,
        #[source]
        source: Box<EssError>,
    },

    #[error("{solver} did not converge within {iterations} iterations (last change {last_change:.3e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        last_change: f64,
    },

    #[error("overlap violated: propensity outside [{epsilon}, {}] on rows {rows:?}", 1.0 - epsilon)]
    Overlap { epsilon: f64, rows: Vec<usize> },

    #[error("sequential procedure aborted at N={train_size} after {} completed steps: {source}", completed.len())]
    SequentialAborted {
        train_size: usize,
        completed: Vec<StepResult>,
        #[source]
        source: Box<EssError>,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl EssError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        EssError::InvalidInput(msg.into())
    }

    pub(crate) fn schema(msg: impl Into<String>) -> Self {
        EssError::Schema(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        EssError::Config(msg.into())
    }
}
