//! Asymptotic variance of the block-out CV risk.
//!
//! Fixed-N regime (B grows): `sigma^2 = N V_train + V_test + 2 N C`, where
//! `V_train` is the sample variance of the block risks, `V_test` the sample
//! variance of the per-observation averages `mu_hat`, and `C` the sample
//! covariance between block risks and the block means of `mu_hat`.
//!
//! Fixed-B regime (N grows, stable learner): `tau^2`, the spread of `mu_hat`
//! around the CV risk. All sample moments use the `count - 1` divisor.

use serde::{Deserialize, Serialize};

use crate::error::{EssError, Result};
use crate::risk::{BlockCvResult, LossForm};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with divisor `len - 1`; zero for fewer than two values.
pub fn sample_variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

pub fn sample_covariance(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    if x.len() < 2 {
        return 0.0;
    }
    let mx = mean(x);
    let my = mean(y);
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (x.len() - 1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "fixed_N")]
    FixedN,
    #[serde(rename = "fixed_B")]
    FixedB,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::FixedN => "fixed_N",
            Regime::FixedB => "fixed_B",
        })
    }
}

/// Fixed-N when `N <= threshold`, fixed-B above. The threshold is a
/// heuristic; 400 is the default.
pub fn select_regime(train_size: usize, threshold: usize) -> Regime {
    if train_size <= threshold {
        Regime::FixedN
    } else {
        Regime::FixedB
    }
}

pub const DEFAULT_REGIME_THRESHOLD: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMode {
    /// Studentize with the variance of the difference loss.
    ExactDifference,
    /// Learner variance plus fixed-rule loss variance.
    ConservativeSum,
}

impl std::str::FromStr for VarianceMode {
    type Err = EssError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diff" | "exact" | "exact_difference" => Ok(VarianceMode::ExactDifference),
            "conservative" | "conservative_sum" => Ok(VarianceMode::ConservativeSum),
            other => Err(EssError::config(format!("unknown variance mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceComponents {
    pub v_train: f64,
    pub v_test: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceEstimate {
    /// Reported variance, never negative.
    pub sigma2: f64,
    /// Value before clipping at zero.
    pub raw: f64,
    pub clipped: bool,
    pub regime: Regime,
    pub components: Option<VarianceComponents>,
    pub n_effective: usize,
}

impl VarianceEstimate {
    fn new(raw: f64, regime: Regime, components: Option<VarianceComponents>, n_effective: usize) -> Self {
        let clipped = raw < 0.0;
        VarianceEstimate {
            sigma2: if clipped { 0.0 } else { raw },
            raw,
            clipped,
            regime,
            components,
            n_effective,
        }
    }

    pub fn sd(&self) -> f64 {
        self.sigma2.sqrt()
    }
}

fn check_blocks(cv: &BlockCvResult) -> Result<()> {
    if cv.blocks < 2 {
        return Err(EssError::InsufficientBlocks { blocks: cv.blocks });
    }
    Ok(())
}

pub fn variance_fixed_n(cv: &BlockCvResult) -> Result<VarianceEstimate> {
    check_blocks(cv)?;
    let v_train = sample_variance(&cv.block_risks);
    let v_test = sample_variance(&cv.mu_hat);
    let c = sample_covariance(&cv.block_risks, &cv.m_hat);
    let n = cv.train_size as f64;
    let raw = n * v_train + v_test + 2.0 * n * c;
    Ok(VarianceEstimate::new(
        raw,
        Regime::FixedN,
        Some(VarianceComponents { v_train, v_test, c }),
        cv.n_effective,
    ))
}

pub fn variance_fixed_b(cv: &BlockCvResult) -> Result<VarianceEstimate> {
    check_blocks(cv)?;
    let n = cv.mu_hat.len();
    let tau2 = cv.mu_hat.iter().map(|m| (m - cv.e_cv) * (m - cv.e_cv)).sum::<f64>() / (n - 1) as f64;
    Ok(VarianceEstimate::new(tau2, Regime::FixedB, None, cv.n_effective))
}

pub fn variance_for_regime(cv: &BlockCvResult, regime: Regime) -> Result<VarianceEstimate> {
    match regime {
        Regime::FixedN => variance_fixed_n(cv),
        Regime::FixedB => variance_fixed_b(cv),
    }
}

/// Variance for the learner-versus-rule comparison.
///
/// `ExactDifference` expects a result computed with the difference loss.
/// `ConservativeSum` expects the learner's plain-loss result plus the rule's
/// pointwise losses on the same kept rows.
pub fn variance_of_difference(
    cv: &BlockCvResult,
    mode: VarianceMode,
    rule_losses: Option<&[f64]>,
    regime: Regime,
) -> Result<VarianceEstimate> {
    match mode {
        VarianceMode::ExactDifference => {
            if cv.loss_form != LossForm::Difference {
                return Err(EssError::invalid(
                    "exact-difference variance needs a CV result built with the difference loss",
                ));
            }
            variance_for_regime(cv, regime)
        }
        VarianceMode::ConservativeSum => {
            if cv.loss_form != LossForm::Plain {
                return Err(EssError::invalid(
                    "conservative variance needs the learner's plain-loss CV result",
                ));
            }
            let rule = rule_losses.ok_or_else(|| {
                EssError::invalid("conservative variance needs the fixed rule's pointwise losses")
            })?;
            let base = variance_for_regime(cv, regime)?;
            let raw = base.sigma2 + sample_variance(rule);
            Ok(VarianceEstimate {
                sigma2: raw,
                raw: base.raw + sample_variance(rule),
                ..base
            })
        }
    }
}
