//! Resolved run configuration, persisted into every result file.

use ess_core::inference::TrainingGrid;
use ess_core::{EssConfig, LearnerSpec, LossKind, VarianceMode};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::ingest::Schema;

/// `10,20,40`, `geom:START:END:COUNT` or `range:START:END:STEP`.
pub fn parse_grid(spec: &str) -> Result<TrainingGrid, CliError> {
    let bad = |what: &str| CliError::Usage(format!("invalid grid '{spec}': {what}"));
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad(&format!("'{s}' is not a positive integer")));
    let grid = if let Some(rest) = spec.strip_prefix("geom:") {
        let p: Vec<&str> = rest.split(':').collect();
        if p.len() != 3 {
            return Err(bad("expected geom:START:END:COUNT"));
        }
        TrainingGrid::geometric(num(p[0])?, num(p[1])?, num(p[2])?)
    } else if let Some(rest) = spec.strip_prefix("range:") {
        let p: Vec<&str> = rest.split(':').collect();
        if p.len() != 3 {
            return Err(bad("expected range:START:END:STEP"));
        }
        TrainingGrid::arithmetic(num(p[0])?, num(p[1])?, num(p[2])?)
    } else {
        let sizes = spec.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
        TrainingGrid::new(sizes)
    };
    grid.map_err(|e| bad(&e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub data: String,
    pub delimiter: String,
    pub schema: Schema,
    pub predictions: Option<String>,
    pub learner: LearnerSpec,
    pub grid_spec: String,
    pub grid: Vec<usize>,
    pub loss: LossKind,
    pub alpha: f64,
    pub variance_mode: VarianceMode,
    pub regime_threshold: usize,
    pub seed: u64,
    pub shuffle: bool,
    pub overlap_epsilon: Option<f64>,
    pub arm: Option<u8>,
    pub out: Option<String>,
}

impl RunConfig {
    pub fn ess_config(&self) -> EssConfig {
        EssConfig {
            loss: self.loss,
            alpha: self.alpha,
            variance_mode: self.variance_mode,
            regime_threshold: self.regime_threshold,
            seed: self.seed,
            shuffle: self.shuffle,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.ess_config().validate().map_err(|e| CliError::Usage(e.to_string()))?;
        self.learner.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("2,5,10").unwrap().sizes(), &[2, 5, 10]);
        assert_eq!(parse_grid("range:5:20:5").unwrap().sizes(), &[5, 10, 15, 20]);
        let g = parse_grid("geom:10:1000:3").unwrap();
        assert_eq!(g.sizes(), &[10, 100, 1000]);
        assert!(parse_grid("5,3").is_err());
        assert!(parse_grid("geom:1:2").is_err());
        assert!(parse_grid("a,b").is_err());
    }
}
