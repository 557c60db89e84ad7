//! Per-size comparison tests and the sequential ESS procedure.
//!
//! Step `k` tests `H0: e_{N_k} <= e_rule` with
//! `T = (e_cv - e_rule) / (sigma_hat / sqrt(n))` and rejects when the lower
//! bound `(e_cv - e_rule) - z_{1-alpha} sigma_hat / sqrt(n)` is positive.
//! The procedure walks the grid upward and stops at the first step that is
//! not rejected; the ESS is then at least one more than the previous size.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::Dataset;
use crate::error::{EssError, Result};
use crate::learners::{Hyperparameters, Learner};
use crate::loss::{LossKind, RiskEstimate};
use crate::risk::{
    block_out_cv_with, difference_loss, fixed_rule_risk, partition_blocks, BlockPartition, CvOptions,
    TargetLoss,
};
use crate::variance::{
    mean, select_regime, variance_for_regime, variance_of_difference, Regime, VarianceEstimate,
    VarianceMode, DEFAULT_REGIME_THRESHOLD,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingGrid {
    sizes: Vec<usize>,
}

impl TrainingGrid {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(EssError::config("training grid is empty"));
        }
        if sizes[0] == 0 {
            return Err(EssError::config("training sizes must be at least 1"));
        }
        if let Some(w) = sizes.windows(2).find(|w| w[0] >= w[1]) {
            return Err(EssError::config(format!(
                "training grid must be strictly increasing, found {} then {}",
                w[0], w[1]
            )));
        }
        Ok(TrainingGrid { sizes })
    }

    /// `count` sizes spaced geometrically from `start` to `end`, rounded and
    /// de-duplicated.
    pub fn geometric(start: usize, end: usize, count: usize) -> Result<Self> {
        if start == 0 || end < start || count == 0 {
            return Err(EssError::config("geometric grid needs 1 <= start <= end and count >= 1"));
        }
        let mut sizes: Vec<usize> = if count == 1 {
            vec![start]
        } else {
            let ratio = (end as f64 / start as f64).powf(1.0 / (count - 1) as f64);
            (0..count)
                .map(|i| (start as f64 * ratio.powi(i as i32)).round() as usize)
                .collect()
        };
        if count > 1 {
            *sizes.last_mut().unwrap() = end;
        }
        sizes.dedup();
        Self::new(sizes)
    }

    /// `start, start + step, ...` up to and including `end`.
    pub fn arithmetic(start: usize, end: usize, step: usize) -> Result<Self> {
        if start == 0 || end < start || step == 0 {
            return Err(EssError::config("range grid needs 1 <= start <= end and step >= 1"));
        }
        Self::new((start..=end).step_by(step).collect())
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    /// Every size must leave at least two blocks.
    pub fn check_feasible(&self, n: usize) -> Result<()> {
        match self.sizes.iter().find(|&&s| s > n / 2) {
            Some(&s) => Err(EssError::GridInfeasible { train_size: s, n }),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssConfig {
    pub loss: LossKind,
    pub alpha: f64,
    pub variance_mode: VarianceMode,
    pub regime_threshold: usize,
    pub seed: u64,
    /// Permute rows before blocking; `false` keeps file order.
    pub shuffle: bool,
}

impl Default for EssConfig {
    fn default() -> Self {
        EssConfig {
            loss: LossKind::Squared,
            alpha: 0.05,
            variance_mode: VarianceMode::ExactDifference,
            regime_threshold: DEFAULT_REGIME_THRESHOLD,
            seed: 0,
            shuffle: true,
        }
    }
}

impl EssConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(EssError::config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.regime_threshold == 0 {
            return Err(EssError::config("regime threshold must be at least 1"));
        }
        Ok(())
    }

    pub fn critical_value(&self) -> f64 {
        z_quantile(1.0 - self.alpha)
    }
}

pub fn z_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Outcome of one studentized comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decision {
    /// `None` when the variance estimate is zero.
    pub t_stat: Option<f64>,
    pub lower_bound: f64,
    pub rejected: bool,
    pub degenerate: bool,
}

/// Studentized one-sided decision for `diff = e_cv - e_rule`. A zero
/// standard error falls back to the sign of `diff`.
pub fn decide(diff: f64, sigma_hat: f64, n_effective: usize, z: f64) -> Decision {
    let scale = sigma_hat / (n_effective as f64).sqrt();
    if !(scale > 0.0) {
        return Decision {
            t_stat: None,
            lower_bound: diff,
            rejected: diff > 0.0,
            degenerate: true,
        };
    }
    let lower_bound = diff - z * scale;
    Decision {
        t_stat: Some(diff / scale),
        lower_bound,
        rejected: lower_bound > 0.0,
        degenerate: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepResult {
    pub train_size: usize,
    pub blocks: usize,
    pub n_effective: usize,
    pub e_cv: f64,
    /// Standard error of `e_cv` from the learner's own variance estimate.
    pub e_cv_se: f64,
    /// Fixed-rule risk on the same kept rows.
    pub e_rule: f64,
    pub diff: f64,
    pub sigma_hat: f64,
    pub t_stat: Option<f64>,
    pub lower_bound: f64,
    pub rejected: bool,
    pub degenerate: bool,
    pub regime: Regime,
    pub variance: VarianceEstimate,
    pub risk_variance: VarianceEstimate,
    pub hyperparameters: Vec<Hyperparameters>,
}

impl StepResult {
    pub fn risk(&self, loss: LossKind) -> RiskEstimate {
        RiskEstimate {
            value: self.e_cv,
            se: self.e_cv_se,
            n_eval: self.n_effective,
            loss,
            scale: crate::loss::MetricScale::Loss,
        }
    }
}

fn partition_for(data: &Dataset, train_size: usize, config: &EssConfig) -> Result<BlockPartition> {
    if config.shuffle {
        partition_blocks(data.n(), train_size, config.seed)
    } else {
        BlockPartition::identity(data.n(), train_size)
    }
}

/// One comparison at training size `train_size`.
pub fn test_step(data: &Dataset, learner: &dyn Learner, train_size: usize, config: &EssConfig) -> Result<StepResult> {
    config.validate()?;
    config.loss.check_outcome_type(data.outcome_type())?;
    let partition = partition_for(data, train_size, config)?;
    let delta = difference_loss(config.loss, data)?;
    let target = TargetLoss(config.loss);
    let mut out = block_out_cv_with(
        data,
        learner,
        &partition,
        &[&target, &delta],
        CvOptions {
            seed: config.seed,
            retain_losses: false,
        },
    )?;
    let cv_delta = out.pop().expect("two losses");
    let cv = out.pop().expect("two losses");
    let regime = select_regime(train_size, config.regime_threshold);
    let kept_rule: Vec<f64> = cv.rows.iter().map(|&r| delta.rule_losses()[r]).collect();
    let e_rule = mean(&kept_rule);
    let diff = cv.e_cv - e_rule;
    let risk_variance = variance_for_regime(&cv, regime)?;
    let variance = match config.variance_mode {
        VarianceMode::ExactDifference => {
            variance_of_difference(&cv_delta, VarianceMode::ExactDifference, None, regime)?
        }
        VarianceMode::ConservativeSum => {
            variance_of_difference(&cv, VarianceMode::ConservativeSum, Some(&kept_rule), regime)?
        }
    };
    let sigma_hat = variance.sd();
    let d = decide(diff, sigma_hat, cv.n_effective, config.critical_value());
    Ok(StepResult {
        train_size,
        blocks: cv.blocks,
        n_effective: cv.n_effective,
        e_cv: cv.e_cv,
        e_cv_se: risk_variance.sd() / (cv.n_effective as f64).sqrt(),
        e_rule,
        diff,
        sigma_hat,
        t_stat: d.t_stat,
        lower_bound: d.lower_bound,
        rejected: d.rejected,
        degenerate: d.degenerate,
        regime,
        variance,
        risk_variance,
        hyperparameters: cv.hyperparameters,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequentialResult {
    pub grid: Vec<usize>,
    /// Steps the sequential rule executed (prefix of the grid).
    pub steps: Vec<StepResult>,
    /// Index of the first non-rejected step, if any.
    pub stop_index: Option<usize>,
    /// Lower end of the one-sided interval `[n_hat, inf)`.
    pub n_hat: usize,
    pub exhausted: bool,
    pub alpha: f64,
    /// Fixed-rule risk over all rows.
    pub e_rule: RiskEstimate,
    /// All grid steps, in curve mode.
    pub curve: Option<Vec<StepResult>>,
    /// `max{N_k : LB_k > 0} + 1` over the full curve, in curve mode.
    pub duality_bound: Option<usize>,
}

/// Applies the stopping rule to ordered step outcomes:
/// `(stop_index, n_hat, exhausted)`.
pub fn stopping_rule(grid: &[usize], rejected: &[bool]) -> (Option<usize>, usize, bool) {
    match rejected.iter().position(|r| !r) {
        Some(0) => (Some(0), 1, false),
        Some(k) => (Some(k), grid[k - 1] + 1, false),
        None => (None, grid[rejected.len() - 1] + 1, true),
    }
}

/// `max{N_k : LB_k > 0} + 1`, or 1 when no lower bound is positive.
pub fn duality_bound(steps: &[StepResult]) -> usize {
    steps
        .iter()
        .filter(|s| s.lower_bound > 0.0)
        .map(|s| s.train_size)
        .max()
        .map_or(1, |n| n + 1)
}

fn prepare(data: &Dataset, learner: &dyn Learner, grid: &TrainingGrid, config: &EssConfig) -> Result<RiskEstimate> {
    config.validate()?;
    config.loss.check_outcome_type(data.outcome_type())?;
    learner.check_outcome(data.outcome_type())?;
    grid.check_feasible(data.n())?;
    fixed_rule_risk(data, config.loss)
}

/// Runs steps in grid order and stops at the first non-rejection. A failing
/// step aborts with the completed steps attached.
pub fn sequential_ess(
    data: &Dataset,
    learner: &dyn Learner,
    grid: &TrainingGrid,
    config: &EssConfig,
) -> Result<SequentialResult> {
    let e_rule = prepare(data, learner, grid, config)?;
    let mut steps: Vec<StepResult> = Vec::new();
    for &n_train in grid.sizes() {
        match test_step(data, learner, n_train, config) {
            Ok(step) => {
                let stop = !step.rejected;
                steps.push(step);
                if stop {
                    break;
                }
            }
            Err(e) => {
                return Err(EssError::SequentialAborted {
                    train_size: n_train,
                    completed: steps,
                    source: Box::new(e),
                })
            }
        }
    }
    let rejected: Vec<bool> = steps.iter().map(|s| s.rejected).collect();
    let (stop_index, n_hat, exhausted) = stopping_rule(grid.sizes(), &rejected);
    Ok(SequentialResult {
        grid: grid.sizes().to_vec(),
        steps,
        stop_index,
        n_hat,
        exhausted,
        alpha: config.alpha,
        e_rule,
        curve: None,
        duality_bound: None,
    })
}

/// Computes every grid step, then applies the same stopping rule.
pub fn error_curve(
    data: &Dataset,
    learner: &dyn Learner,
    grid: &TrainingGrid,
    config: &EssConfig,
) -> Result<SequentialResult> {
    let e_rule = prepare(data, learner, grid, config)?;
    let mut all = Vec::with_capacity(grid.len());
    for &n_train in grid.sizes() {
        match test_step(data, learner, n_train, config) {
            Ok(step) => all.push(step),
            Err(e) => {
                return Err(EssError::SequentialAborted {
                    train_size: n_train,
                    completed: all,
                    source: Box::new(e),
                })
            }
        }
    }
    let rejected: Vec<bool> = all.iter().map(|s| s.rejected).collect();
    let (stop_index, n_hat, exhausted) = stopping_rule(grid.sizes(), &rejected);
    let executed = stop_index.map_or(all.len(), |k| k + 1);
    Ok(SequentialResult {
        grid: grid.sizes().to_vec(),
        steps: all[..executed].to_vec(),
        stop_index,
        n_hat,
        exhausted,
        alpha: config.alpha,
        e_rule,
        duality_bound: Some(duality_bound(&all)),
        curve: Some(all),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PluginEss {
    Size(usize),
    BeyondGrid,
}

/// First grid size whose CV risk is at most the rule's risk.
pub fn plugin_ess(curve: &[(usize, f64)], e_rule: f64) -> PluginEss {
    curve
        .iter()
        .find(|(_, e)| *e <= e_rule)
        .map_or(PluginEss::BeyondGrid, |(n, _)| PluginEss::Size(*n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityViolation {
    pub from: usize,
    pub to: usize,
    pub delta: f64,
    /// The increase is smaller than twice the combined standard error.
    pub within_noise: bool,
}

/// Adjacent increases of a risk curve given as `(N, risk, se)`.
pub fn check_monotonicity(curve: &[(usize, f64, f64)]) -> Vec<MonotonicityViolation> {
    curve
        .windows(2)
        .filter_map(|w| {
            let (n0, e0, s0) = w[0];
            let (n1, e1, s1) = w[1];
            let delta = e1 - e0;
            (delta > 0.0).then(|| MonotonicityViolation {
                from: n0,
                to: n1,
                delta,
                within_noise: delta < 2.0 * (s0 * s0 + s1 * s1).sqrt(),
            })
        })
        .collect()
}
