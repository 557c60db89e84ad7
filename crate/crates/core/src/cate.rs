//! Treatment-arm ESS and CATE ESS through the transformed outcome
//! `Y~ = Y (T - pi) / (pi (1 - pi))`, whose conditional mean given `X` is
//! the CATE when treatment is unconfounded and `pi` is known.
//!
//! For squared loss the risk of a CATE rule `g` against `Y~` equals its risk
//! against the true CATE plus a term not depending on `g`, so the crossing
//! point is the same on either scale.

use crate::data::{Dataset, OutcomeType};
use crate::error::{EssError, Result};
use crate::inference::{sequential_ess, EssConfig, SequentialResult, TrainingGrid};
use crate::learners::Learner;
use crate::loss::LossKind;

pub const DEFAULT_OVERLAP_EPSILON: f64 = 0.01;

/// `y (t - pi) / (pi (1 - pi))`.
pub fn transformed_outcome(y: f64, t: u8, pi: f64) -> f64 {
    let t = t as f64;
    y * (t - pi) / (pi * (1.0 - pi))
}

/// Rows whose propensity lies outside `[epsilon, 1 - epsilon]`.
pub fn overlap_violations(pi: &[f64], epsilon: f64) -> Vec<usize> {
    pi.iter()
        .enumerate()
        .filter(|(_, &p)| !(p >= epsilon && p <= 1.0 - epsilon))
        .map(|(i, _)| i)
        .collect()
}

/// A dataset with treatment and known propensity that satisfies overlap.
#[derive(Debug, Clone)]
pub struct CateDataset {
    data: Dataset,
    epsilon: f64,
}

impl CateDataset {
    /// Violating rows are rejected, never clipped.
    pub fn new(data: Dataset, epsilon: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&epsilon) {
            return Err(EssError::config(format!("overlap epsilon must lie in [0, 0.5), got {epsilon}")));
        }
        if data.treatment().is_none() {
            return Err(EssError::schema("CATE analysis needs a treatment column"));
        }
        match (data.propensity(), data.transformed_outcome()) {
            (Some(pi), _) => {
                let rows = overlap_violations(pi, epsilon);
                if !rows.is_empty() {
                    return Err(EssError::Overlap { epsilon, rows });
                }
            }
            (None, Some(_)) => {}
            (None, None) => {
                return Err(EssError::schema(
                    "CATE analysis needs a propensity or a transformed_outcome column",
                ))
            }
        }
        Ok(CateDataset { data, epsilon })
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Transformed outcome per row; a supplied column takes precedence.
    pub fn transformed(&self) -> Result<Vec<f64>> {
        if let Some(v) = self.data.transformed_outcome() {
            return Ok(v.to_vec());
        }
        let y = self
            .data
            .outcome()
            .as_real()
            .ok_or_else(|| EssError::invalid("the transformed outcome needs a numeric outcome"))?;
        let t = self.data.treatment().expect("checked at construction");
        let pi = self.data.propensity().expect("checked at construction");
        Ok((0..self.data.n())
            .map(|i| transformed_outcome(y[i], t[i], pi[i]))
            .collect())
    }

    /// Rows with `T = t`, keeping the fixed-rule prediction column.
    pub fn arm(&self, t: u8) -> Result<Dataset> {
        if t > 1 {
            return Err(EssError::invalid(format!("treatment arm must be 0 or 1, got {t}")));
        }
        let treat = self.data.treatment().expect("checked at construction");
        let rows: Vec<usize> = (0..self.data.n()).filter(|&i| treat[i] == t).collect();
        if rows.is_empty() {
            return Err(EssError::invalid(format!("treatment arm {t} has no rows")));
        }
        Ok(self.data.subset(&rows))
    }

    /// Regression problem of predicting `Y~` from covariates, with the CATE
    /// prediction column as the fixed rule.
    pub fn cate_problem(&self) -> Result<Dataset> {
        let g = self
            .data
            .cate_prediction()
            .ok_or_else(|| EssError::schema("CATE ESS needs a cate_prediction column"))?
            .to_vec();
        self.data
            .with_numeric_problem("transformed_outcome", self.transformed()?, Some(("cate_prediction", g)))
    }
}

/// Sequential ESS within the `T = t` subsample, scaled by the arm's own size.
/// Zero-one loss is accepted here, though the decomposition argument behind
/// the CATE variant only holds for squared loss.
pub fn arm_specific_ess(
    data: &CateDataset,
    learner: &dyn Learner,
    grid: &TrainingGrid,
    config: &EssConfig,
    t: u8,
) -> Result<SequentialResult> {
    let arm = data.arm(t)?;
    if arm.prediction().is_none() {
        return Err(EssError::schema("arm-specific ESS needs a fixed_rule_prediction column"));
    }
    sequential_ess(&arm, learner, grid, config)
}

/// Sequential ESS for predicting the CATE; squared loss only.
pub fn cate_ess(
    data: &CateDataset,
    learner: &dyn Learner,
    grid: &TrainingGrid,
    config: &EssConfig,
) -> Result<SequentialResult> {
    check_cate_config(config)?;
    let problem = data.cate_problem()?;
    sequential_ess(&problem, learner, grid, config)
}

pub fn check_cate_config(config: &EssConfig) -> Result<()> {
    if config.loss != LossKind::Squared {
        return Err(EssError::config(format!(
            "CATE ESS requires squared loss, got {}",
            config.loss
        )));
    }
    Ok(())
}

pub fn check_numeric(data: &Dataset) -> Result<()> {
    if data.outcome_type() != OutcomeType::Numeric {
        return Err(EssError::invalid("CATE analysis needs a numeric outcome"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{Family, LearnerSpec};

    fn rct(y: Vec<f64>, t: Vec<f64>, pi: Vec<f64>) -> Dataset {
        let n = y.len();
        Dataset::builder()
            .numeric("x", (0..n).map(|i| i as f64).collect())
            .outcome_numeric("y", y)
            .treatment("t", t)
            .propensity("pi", pi)
            .cate_prediction("g", vec![0.0; n])
            .build()
            .unwrap()
    }

    #[test]
    fn formula_examples() {
        assert_eq!(transformed_outcome(3.0, 1, 0.5), 6.0);
        assert_eq!(transformed_outcome(3.0, 0, 0.5), -6.0);
    }

    #[test]
    fn swapping_arm_and_propensity_flips_sign() {
        for &(y, pi) in &[(1.7, 0.3), (-2.0, 0.9), (0.5, 0.01)] {
            let a = transformed_outcome(y, 1, pi);
            let b = -transformed_outcome(y, 0, 1.0 - pi);
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} {b}");
        }
    }

    #[test]
    fn overlap_is_rejected_with_rows() {
        let d = rct(vec![1.0; 3], vec![0.0, 1.0, 1.0], vec![0.5, 0.005, 0.999]);
        match CateDataset::new(d, DEFAULT_OVERLAP_EPSILON) {
            Err(EssError::Overlap { rows, .. }) => assert_eq!(rows, vec![1, 2]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_outcome_gives_zero_rule_risk() {
        let d = rct(vec![0.0; 8], vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0], vec![0.5; 8]);
        let c = CateDataset::new(d, 0.01).unwrap();
        let p = c.cate_problem().unwrap();
        let r = crate::risk::fixed_rule_risk(&p, LossKind::Squared).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn empty_arm_and_loss_checks() {
        let d = rct(vec![1.0; 4], vec![0.0; 4], vec![0.5; 4]);
        let c = CateDataset::new(d, 0.01).unwrap();
        assert!(c.arm(1).is_err());
        let cfg = EssConfig {
            loss: LossKind::ZeroOne,
            ..Default::default()
        };
        let grid = TrainingGrid::new(vec![1]).unwrap();
        assert!(matches!(
            cate_ess(&c, &LearnerSpec::new(Family::BaselineMean), &grid, &cfg),
            Err(EssError::Config(_))
        ));
    }
}
