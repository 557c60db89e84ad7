use serde::Serialize;

use crate::data::{Dataset, Target};
use crate::error::{EssError, Result};
use crate::learners::Hyperparameters;
use crate::loss::Outcome;

/// Where a prediction rule came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Provenance {
    FixedRule,
    Trained {
        learner: String,
        block: Option<usize>,
        hyperparameters: Hyperparameters,
        seed: u64,
    },
}

/// A deterministic map from a dataset row's covariates to a prediction.
///
/// Rules are built against one dataset (column layout) and must be defined
/// for every row of it.
pub trait PredictionRule: Send + Sync {
    fn predict_row(&self, data: &Dataset, row: usize) -> Outcome;

    fn predict_rows(&self, data: &Dataset, rows: &[usize], out: &mut [Outcome]) {
        for (slot, &row) in out.iter_mut().zip(rows) {
            *slot = self.predict_row(data, row);
        }
    }

    fn provenance(&self) -> &Provenance;
}

/// The dataset's fixed-rule prediction column viewed as a rule.
pub struct FixedRule {
    provenance: Provenance,
}

impl FixedRule {
    pub fn for_dataset(data: &Dataset) -> Result<Self> {
        if data.prediction().is_none() {
            return Err(EssError::schema("dataset has no fixed_rule_prediction column"));
        }
        Ok(FixedRule {
            provenance: Provenance::FixedRule,
        })
    }
}

impl PredictionRule for FixedRule {
    fn predict_row(&self, data: &Dataset, row: usize) -> Outcome {
        data.prediction().expect("checked at construction").get(row)
    }

    fn provenance(&self) -> &Provenance {
        &self.provenance
    }
}

/// Predicts the same value everywhere.
pub struct ConstantRule {
    value: Outcome,
    provenance: Provenance,
}

impl ConstantRule {
    pub fn new(value: Outcome, provenance: Provenance) -> Self {
        ConstantRule { value, provenance }
    }

    pub fn value(&self) -> Outcome {
        self.value
    }
}

impl PredictionRule for ConstantRule {
    fn predict_row(&self, _data: &Dataset, _row: usize) -> Outcome {
        self.value
    }

    fn predict_rows(&self, _data: &Dataset, _rows: &[usize], out: &mut [Outcome]) {
        out.fill(self.value);
    }

    fn provenance(&self) -> &Provenance {
        &self.provenance
    }
}

/// Pointwise losses of the fixed rule against the outcome, for every row.
pub fn fixed_rule_losses(data: &Dataset, loss: crate::loss::LossKind) -> Result<Vec<f64>> {
    loss.check_outcome_type(data.outcome_type())?;
    let pred = data
        .prediction()
        .ok_or_else(|| EssError::schema("dataset has no fixed_rule_prediction column"))?;
    let truth = data.outcome();
    Ok(match (truth, pred) {
        (Target::Real(y), Target::Real(p)) => {
            y.iter().zip(p).map(|(&y, &p)| (p - y) * (p - y)).collect()
        }
        (Target::Class(y), Target::Class(p)) => {
            y.iter().zip(p).map(|(y, p)| (y != p) as u8 as f64).collect()
        }
        _ => unreachable!("builder enforces matching types"),
    })
}
