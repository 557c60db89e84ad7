//! Pointwise losses, risk estimates and binary report metrics.

use serde::{Deserialize, Serialize};

use crate::data::OutcomeType;
use crate::error::{EssError, Result};

/// A single outcome value: numeric, or a label code.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Real(f64),
    Class(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `(y' - y)^2`, numeric outcomes only.
    Squared,
    /// `1{y' != y}`, label outcomes only.
    ZeroOne,
}

impl LossKind {
    pub fn outcome_type(self) -> OutcomeType {
        match self {
            LossKind::Squared => OutcomeType::Numeric,
            LossKind::ZeroOne => OutcomeType::Label,
        }
    }

    pub fn check_outcome_type(self, ty: OutcomeType) -> Result<()> {
        if self.outcome_type() == ty {
            Ok(())
        } else {
            Err(EssError::invalid(format!(
                "{self:?} loss requires {:?} outcomes, dataset outcome is {ty:?}",
                self.outcome_type()
            )))
        }
    }

    /// Loss of predicting `pred` when the truth is `truth`. Callers must
    /// have validated the outcome type; mismatched pairs are a logic error.
    #[inline]
    pub(crate) fn eval(self, truth: Outcome, pred: Outcome) -> f64 {
        match (self, truth, pred) {
            (LossKind::Squared, Outcome::Real(y), Outcome::Real(p)) => {
                let d = p - y;
                d * d
            }
            (LossKind::ZeroOne, Outcome::Class(y), Outcome::Class(p)) => (y != p) as u8 as f64,
            _ => unreachable!("loss/outcome types were validated upstream"),
        }
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LossKind::Squared => "squared",
            LossKind::ZeroOne => "zero_one",
        })
    }
}

impl std::str::FromStr for LossKind {
    type Err = EssError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared" | "mse" => Ok(LossKind::Squared),
            "zero_one" | "zero-one" | "01" => Ok(LossKind::ZeroOne),
            other => Err(EssError::config(format!("unknown loss '{other}'"))),
        }
    }
}

pub fn evaluate_loss(kind: LossKind, y_true: Outcome, y_pred: Outcome) -> Result<f64> {
    match (kind, y_true, y_pred) {
        (LossKind::Squared, Outcome::Real(y), Outcome::Real(p)) => {
            if !(y.is_finite() && p.is_finite()) {
                return Err(EssError::invalid("squared loss needs finite outcomes"));
            }
            Ok(kind.eval(y_true, y_pred))
        }
        (LossKind::ZeroOne, Outcome::Class(_), Outcome::Class(_)) => Ok(kind.eval(y_true, y_pred)),
        _ => Err(EssError::invalid(format!(
            "{kind} loss cannot compare {y_true:?} with {y_pred:?}"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricScale {
    Loss,
    Rmse,
}

/// A risk value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub value: f64,
    pub se: f64,
    pub n_eval: usize,
    pub loss: LossKind,
    pub scale: MetricScale,
}

impl RiskEstimate {
    /// Delta-method conversion of an MSE estimate to RMSE:
    /// `(v, s) -> (sqrt(v), s / (2 sqrt(v)))`.
    pub fn to_rmse(&self) -> Result<RiskEstimate> {
        if self.loss != LossKind::Squared || self.scale != MetricScale::Loss {
            return Err(EssError::invalid("RMSE scale requires an MSE estimate under squared loss"));
        }
        let root = self.value.sqrt();
        let se = if self.value > 0.0 {
            self.se / (2.0 * root)
        } else if self.se == 0.0 {
            0.0
        } else {
            return Err(EssError::Numeric(
                "delta-method RMSE standard error is undefined at MSE 0".into(),
            ));
        };
        Ok(RiskEstimate {
            value: root,
            se,
            scale: MetricScale::Rmse,
            ..*self
        })
    }

    pub fn to_mse(&self) -> Result<RiskEstimate> {
        match self.scale {
            MetricScale::Loss => Ok(*self),
            MetricScale::Rmse => Ok(RiskEstimate {
                value: self.value * self.value,
                se: 2.0 * self.value * self.se,
                scale: MetricScale::Loss,
                ..*self
            }),
        }
    }

    /// The scale used in reports: RMSE for squared loss, the raw loss otherwise.
    pub fn report_scale(&self) -> Result<RiskEstimate> {
        match (self.loss, self.scale) {
            (LossKind::Squared, MetricScale::Loss) => self.to_rmse(),
            _ => Ok(*self),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

/// Report-only aggregates for binary labels. `None` marks an undefined term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub accuracy: f64,
    pub balanced_accuracy: Option<f64>,
    pub f1: Option<f64>,
    pub recall_positive: Option<f64>,
    pub recall_negative: Option<f64>,
    /// A class is absent from the truth, so a recall term is undefined.
    pub degenerate: bool,
    pub confusion: Confusion,
}

pub fn aggregate_metrics(y_true: &[u8], y_pred: &[u8]) -> Result<BinaryMetrics> {
    if y_true.is_empty() || y_true.len() != y_pred.len() {
        return Err(EssError::invalid(
            "metrics need equal-length, non-empty label lists",
        ));
    }
    if y_true.iter().chain(y_pred).any(|&v| v > 1) {
        return Err(EssError::invalid("binary metrics need labels in {0,1}"));
    }
    let mut c = Confusion { tp: 0, fp: 0, tn: 0, fn_: 0 };
    for (&y, &p) in y_true.iter().zip(y_pred) {
        match (y, p) {
            (1, 1) => c.tp += 1,
            (0, 1) => c.fp += 1,
            (0, 0) => c.tn += 1,
            _ => c.fn_ += 1,
        }
    }
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    let recall_positive = ratio(c.tp, c.tp + c.fn_);
    let recall_negative = ratio(c.tn, c.tn + c.fp);
    let balanced_accuracy = match (recall_positive, recall_negative) {
        (Some(a), Some(b)) => Some((a + b) / 2.0),
        _ => None,
    };
    Ok(BinaryMetrics {
        accuracy: (c.tp + c.tn) as f64 / y_true.len() as f64,
        balanced_accuracy,
        f1: ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
        recall_positive,
        recall_negative,
        degenerate: recall_positive.is_none() || recall_negative.is_none(),
        confusion: c,
    })
}
