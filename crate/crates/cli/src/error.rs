use ess_core::EssError;
use serde_json::{json, Value};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numeric(String),
    #[error(transparent)]
    Core(#[from] EssError),
}

fn core_kind(e: &EssError) -> &'static str {
    match e {
        EssError::InvalidInput(_) | EssError::Schema(_) | EssError::Overlap { .. } => "data",
        EssError::Config(_) | EssError::GridInfeasible { .. } | EssError::InsufficientBlocks { .. } => "usage",
        EssError::BlockTraining { source, .. } | EssError::SequentialAborted { source, .. } => match core_kind(source) {
            "data" => "data",
            _ => "numeric",
        },
        EssError::NonConvergence { .. } | EssError::Numeric(_) => "numeric",
    }
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Data(_) => "data",
            CliError::Numeric(_) => "numeric",
            CliError::Core(e) => core_kind(e),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "usage" => 1,
            "data" => 2,
            _ => 3,
        }
    }

    /// Machine-readable record written to stderr on failure.
    pub fn record(&self) -> Value {
        let mut details = json!({});
        if let CliError::Core(e) = self {
            match e {
                EssError::Overlap { epsilon, rows } => details = json!({ "epsilon": epsilon, "rows": rows }),
                EssError::GridInfeasible { train_size, n } => details = json!({ "train_size": train_size, "n": n }),
                EssError::SequentialAborted {
                    train_size, completed, ..
                } => {
                    details = json!({
                        "train_size": train_size,
                        "completed_steps": completed,
                    })
                }
                EssError::BlockTraining { block, train_size, .. } => {
                    details = json!({ "block": block, "train_size": train_size })
                }
                _ => {}
            }
        }
        json!({
            "error": {
                "kind": self.kind(),
                "exit_code": self.exit_code(),
                "message": self.to_string(),
                "details": details,
            }
        })
    }
}
