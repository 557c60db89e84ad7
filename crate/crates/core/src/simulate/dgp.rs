//! Synthetic data-generating processes with known fixed-rule risk.
//!
//! Fixed rules are the true conditional mean shifted by a deterministic
//! bias, so their squared-error risk is `noise variance + bias^2`.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cate::CateDataset;
use crate::data::Dataset;
use crate::error::Result;
use crate::loss::LossKind;
use crate::seeds::{derive_seed, rng, tag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Dgp {
    /// `Y = b0 + X'beta + sd * eps`, `X ~ N(0, I)`.
    LinearGaussian {
        intercept: f64,
        beta: Vec<f64>,
        noise_sd: f64,
        rule_bias: f64,
    },
    /// `Y = mean + sd * eps` with one irrelevant covariate.
    PureNoise { mean: f64, sd: f64, rule_bias: f64 },
    /// `P(Y = 1 | X) = logistic(b0 + X'beta)`; the rule predicts 1 when the
    /// index exceeds `rule_threshold`.
    Logistic {
        intercept: f64,
        beta: Vec<f64>,
        rule_threshold: f64,
    },
    /// Randomized trial: `X ~ N(x_mean, 1)`, `T ~ Bernoulli(propensity)`,
    /// `Y = T tau_slope X + sd * eps`. The CATE rule is `g(x) = g_slope x`.
    /// Samples are returned as the transformed-outcome regression problem.
    Rct {
        x_mean: f64,
        tau_slope: f64,
        noise_sd: f64,
        propensity: f64,
        g_slope: f64,
    },
}

const LOGISTIC_ORACLE_DRAWS: usize = 1_000_000;

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn normal(r: &mut crate::seeds::Rng) -> f64 {
    r.sample(StandardNormal)
}

impl Dgp {
    pub fn loss(&self) -> LossKind {
        match self {
            Dgp::Logistic { .. } => LossKind::ZeroOne,
            _ => LossKind::Squared,
        }
    }

    fn covariates(&self) -> usize {
        match self {
            Dgp::LinearGaussian { beta, .. } | Dgp::Logistic { beta, .. } => beta.len(),
            Dgp::PureNoise { .. } | Dgp::Rct { .. } => 1,
        }
    }

    /// Raw draw of `n` rows, including the fixed-rule column (and, for the
    /// trial design, treatment, propensity and CATE prediction columns).
    pub fn sample_raw(&self, n: usize, seed: u64) -> Result<Dataset> {
        let mut r = rng(seed);
        let p = self.covariates();
        let mut x = vec![vec![0.0; n]; p];
        let mut y = vec![0.0; n];
        let mut pred = vec![0.0; n];
        match self {
            Dgp::LinearGaussian {
                intercept,
                beta,
                noise_sd,
                rule_bias,
            } => {
                for i in 0..n {
                    let mut mu = *intercept;
                    for j in 0..p {
                        x[j][i] = normal(&mut r);
                        mu += beta[j] * x[j][i];
                    }
                    y[i] = mu + noise_sd * normal(&mut r);
                    pred[i] = mu + rule_bias;
                }
            }
            Dgp::PureNoise { mean, sd, rule_bias } => {
                for i in 0..n {
                    x[0][i] = normal(&mut r);
                    y[i] = mean + sd * normal(&mut r);
                    pred[i] = mean + rule_bias;
                }
            }
            Dgp::Logistic {
                intercept,
                beta,
                rule_threshold,
            } => {
                let mut labels = Vec::with_capacity(n);
                let mut rule = Vec::with_capacity(n);
                for _ in 0..n {
                    let mut eta = *intercept;
                    for (j, b) in beta.iter().enumerate() {
                        let v = normal(&mut r);
                        x[j][labels.len()] = v;
                        eta += b * v;
                    }
                    let yi = r.random::<f64>() < logistic(eta);
                    labels.push(if yi { "1" } else { "0" }.to_string());
                    rule.push(if eta > *rule_threshold { "1" } else { "0" }.to_string());
                }
                let mut b = Dataset::builder();
                for (j, col) in x.into_iter().enumerate() {
                    b = b.numeric(&format!("x{}", j + 1), col);
                }
                return b.outcome_labels("y", labels).prediction_labels("rule", rule).build();
            }
            Dgp::Rct {
                x_mean,
                tau_slope,
                noise_sd,
                propensity,
                g_slope,
            } => {
                let mut t = vec![0.0; n];
                let mut g = vec![0.0; n];
                for i in 0..n {
                    let xi = x_mean + normal(&mut r);
                    let ti = (r.random::<f64>() < *propensity) as u8 as f64;
                    x[0][i] = xi;
                    t[i] = ti;
                    y[i] = ti * tau_slope * xi + noise_sd * normal(&mut r);
                    g[i] = g_slope * xi;
                }
                return Dataset::builder()
                    .numeric("x1", x.pop().unwrap())
                    .outcome_numeric("y", y)
                    .treatment("t", t)
                    .propensity("pi", vec![*propensity; n])
                    .cate_prediction("g", g)
                    .build();
            }
        }
        let mut b = Dataset::builder();
        for (j, col) in x.into_iter().enumerate() {
            b = b.numeric(&format!("x{}", j + 1), col);
        }
        b.outcome_numeric("y", y).prediction_numeric("rule", pred).build()
    }

    /// The dataset the ESS pipeline runs on: the raw draw, or for the trial
    /// design the transformed-outcome problem with `g` as the fixed rule.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        let raw = self.sample_raw(n, seed)?;
        match self {
            Dgp::Rct { .. } => CateDataset::new(raw, 0.0)?.cate_problem(),
            _ => Ok(raw),
        }
    }

    /// Variance of the pipeline's target variable, where known in closed form.
    pub fn target_variance(&self) -> Option<f64> {
        match self {
            Dgp::LinearGaussian { beta, noise_sd, .. } => {
                Some(beta.iter().map(|b| b * b).sum::<f64>() + noise_sd * noise_sd)
            }
            Dgp::PureNoise { sd, .. } => Some(sd * sd),
            Dgp::Rct {
                x_mean, tau_slope, ..
            } => Some(self.rct_second_moment() - (tau_slope * x_mean).powi(2)),
            Dgp::Logistic { .. } => None,
        }
    }

    /// `E[Y~^2] = E[Y(1)^2] / pi + E[Y(0)^2] / (1 - pi)`.
    fn rct_second_moment(&self) -> f64 {
        match self {
            Dgp::Rct {
                x_mean,
                tau_slope,
                noise_sd,
                propensity,
                ..
            } => {
                let ex2 = 1.0 + x_mean * x_mean;
                let s2 = noise_sd * noise_sd;
                (tau_slope * tau_slope * ex2 + s2) / propensity + s2 / (1.0 - propensity)
            }
            _ => unreachable!(),
        }
    }

    /// Risk of the fixed rule on the pipeline's target.
    pub fn rule_risk(&self) -> f64 {
        match self {
            Dgp::LinearGaussian {
                noise_sd, rule_bias, ..
            } => noise_sd * noise_sd + rule_bias * rule_bias,
            Dgp::PureNoise { sd, rule_bias, .. } => sd * sd + rule_bias * rule_bias,
            Dgp::Rct {
                x_mean,
                tau_slope,
                g_slope,
                ..
            } => {
                // E[(Y~ - g)^2] = E[Y~^2] - 2 E[tau g] + E[g^2]
                let ex2 = 1.0 + x_mean * x_mean;
                self.rct_second_moment() - 2.0 * tau_slope * g_slope * ex2 + g_slope * g_slope * ex2
            }
            Dgp::Logistic {
                intercept,
                beta,
                rule_threshold,
            } => {
                // brute force: expected misclassification of the threshold rule
                let mut r = rng(derive_seed(0, &[tag::ORACLE]));
                let mut total = 0.0;
                for _ in 0..LOGISTIC_ORACLE_DRAWS {
                    let eta = intercept + beta.iter().map(|b| b * normal(&mut r)).sum::<f64>();
                    let p = logistic(eta);
                    total += if eta > *rule_threshold { 1.0 - p } else { p };
                }
                total / LOGISTIC_ORACLE_DRAWS as f64
            }
        }
    }

    /// Closed-form risk of the training-mean predictor at size `n_train`:
    /// `Var(target) (1 + 1/N)`.
    pub fn baseline_mean_risk(&self, n_train: usize) -> Option<f64> {
        self.target_variance().map(|v| v * (1.0 + 1.0 / n_train as f64))
    }

    /// Asymptotic fixed-N variance of the CV risk for the training-mean
    /// predictor when the target is Gaussian: `2 s^4 (1 + 3/N)`.
    pub fn baseline_mean_sigma2(&self, n_train: usize) -> Option<f64> {
        match self {
            Dgp::LinearGaussian { .. } | Dgp::PureNoise { .. } => {
                let s2 = self.target_variance()?;
                Some(2.0 * s2 * s2 * (1.0 + 3.0 / n_train as f64))
            }
            _ => None,
        }
    }

    /// True CATE at `x` for the trial design.
    pub fn cate(&self, x: f64) -> Option<f64> {
        match self {
            Dgp::Rct { tau_slope, .. } => Some(tau_slope * x),
            _ => None,
        }
    }
}
