//! Monte Carlo validation: oracle risk curves, interval coverage, FWER,
//! studentized CLT checks and variance-estimator consistency.
//!
//! Replication `r` draws its data and runs the pipeline with seed
//! `derive_seed(master, [REPLICATION, r])`, so every experiment is
//! reproducible from its config alone. Proportions pass when within three
//! Monte Carlo standard errors of nominal.

pub mod dgp;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::distribution::{ContinuousCDF, Normal};

pub use dgp::Dgp;

use crate::error::{EssError, Result};
use crate::inference::{sequential_ess, z_quantile, EssConfig, TrainingGrid};
use crate::learners::{Family, Learner, LearnerSpec};
use crate::loss::Outcome;
use crate::risk::{block_out_cv_with, partition_blocks, CvOptions, TargetLoss};
use crate::seeds::{derive_seed, tag};
use crate::variance::{
    mean, select_regime, variance_for_regime, Regime, VarianceMode, DEFAULT_REGIME_THRESHOLD,
};

pub fn replication_seed(master: u64, r: usize) -> u64 {
    derive_seed(master, &[tag::REPLICATION, r as u64])
}

/// `sqrt(p (1 - p) / R)`.
pub fn proportion_mc_se(p: f64, replications: usize) -> f64 {
    (p * (1.0 - p) / replications as f64).sqrt()
}

/// SHA-256 of the config's canonical JSON.
pub fn config_digest<T: Serialize>(config: &T) -> String {
    let json = serde_json::to_vec(config).expect("configs serialize");
    Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OraclePoint {
    pub train_size: usize,
    pub risk: f64,
    pub mc_se: f64,
}

/// Monte Carlo `e_N`: fresh size-`N` training sets, each rule scored on a
/// fresh test draw of `test_size` rows.
pub fn oracle_risk(
    dgp: &Dgp,
    learner: &dyn Learner,
    train_size: usize,
    reps: usize,
    test_size: usize,
    seed: u64,
) -> Result<OraclePoint> {
    if reps < 100 {
        return Err(EssError::config(format!("oracle risk needs at least 100 reps, got {reps}")));
    }
    if train_size == 0 || test_size == 0 {
        return Err(EssError::config("oracle risk needs positive train and test sizes"));
    }
    let loss = dgp.loss();
    let risks: Vec<Result<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let s = derive_seed(seed, &[tag::ORACLE, train_size as u64, r as u64]);
            // one draw holds both parts so label codes agree
            let data = dgp.sample(train_size + test_size, s)?;
            let train: Vec<usize> = (0..train_size).collect();
            let test: Vec<usize> = (train_size..train_size + test_size).collect();
            let hp = learner.tune(&data, &train, derive_seed(s, &[tag::TUNING]))?;
            let rule = learner.train(&data, &train, &hp, derive_seed(s, &[tag::BLOCK]), None)?;
            let mut preds = vec![Outcome::Real(0.0); test.len()];
            rule.predict_rows(&data, &test, &mut preds);
            Ok(test
                .iter()
                .zip(&preds)
                .map(|(&i, &p)| loss.eval(data.outcome().get(i), p))
                .sum::<f64>()
                / test_size as f64)
        })
        .collect();
    let risks = risks.into_iter().collect::<Result<Vec<_>>>()?;
    let value = mean(&risks);
    Ok(OraclePoint {
        train_size,
        risk: value,
        mc_se: (crate::variance::sample_variance(&risks) / reps as f64).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OracleMethod {
    /// Training-mean learner with a closed-form curve.
    ClosedForm,
    MonteCarlo { reps: usize, test_size: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCurve {
    pub points: Vec<OraclePoint>,
    pub e_rule: f64,
    /// Exact crossing over all integers when the curve is closed-form;
    /// `None` there means the curve never crosses.
    pub n_star_exact: Option<Option<usize>>,
    /// Index of the first grid size whose null holds.
    pub k_star: Option<usize>,
    /// `N_{k*-1} + 1` (1 when `k* = 1`), or `N_K + 1` without a crossing.
    pub n_star_lower: usize,
}

impl OracleCurve {
    /// Crossing used for coverage; `None` means infinite.
    pub fn n_star(&self) -> Option<usize> {
        match self.n_star_exact {
            Some(exact) => exact,
            None => self.k_star.map(|_| self.n_star_lower),
        }
    }
}

fn weakly_below(e: f64, rule: f64) -> bool {
    e <= rule + 1e-12 * rule.abs().max(1.0)
}

pub fn oracle_curve(dgp: &Dgp, learner: &LearnerSpec, grid: &[usize], method: &OracleMethod, seed: u64) -> Result<OracleCurve> {
    let e_rule = dgp.rule_risk();
    let (points, exact) = match method {
        OracleMethod::ClosedForm => {
            if learner.family != Family::BaselineMean {
                return Err(EssError::config("closed-form oracle only covers baseline_mean"));
            }
            let var = dgp
                .target_variance()
                .ok_or_else(|| EssError::config("DGP has no closed-form target variance"))?;
            let points = grid
                .iter()
                .map(|&n| OraclePoint {
                    train_size: n,
                    risk: var * (1.0 + 1.0 / n as f64),
                    mc_se: 0.0,
                })
                .collect();
            // var (1 + 1/N) <= e_rule  <=>  N >= var / (e_rule - var)
            let exact = if e_rule > var {
                let bound = (var / (e_rule - var)).ceil().max(1.0) as usize;
                let mut n = bound.saturating_sub(2).max(1);
                while !weakly_below(var * (1.0 + 1.0 / n as f64), e_rule) {
                    n += 1;
                }
                Some(n)
            } else {
                None
            };
            (points, Some(exact))
        }
        OracleMethod::MonteCarlo { reps, test_size } => {
            let points = grid
                .iter()
                .map(|&n| oracle_risk(dgp, learner, n, *reps, *test_size, seed))
                .collect::<Result<Vec<_>>>()?;
            (points, None)
        }
    };
    let k_star = points.iter().position(|p| weakly_below(p.risk, e_rule));
    let n_star_lower = match k_star {
        Some(0) => 1,
        Some(k) => grid[k - 1] + 1,
        None => grid[grid.len() - 1] + 1,
    };
    Ok(OracleCurve {
        points,
        e_rule,
        n_star_exact: exact,
        k_star,
        n_star_lower,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub dgp: Dgp,
    pub learner: LearnerSpec,
    pub n: usize,
    pub grid: Vec<usize>,
    pub alpha: f64,
    pub variance_mode: VarianceMode,
    pub regime_threshold: usize,
    pub replications: usize,
    pub seed: u64,
    pub oracle: OracleMethod,
}

impl SimulationConfig {
    pub fn new(dgp: Dgp, learner: LearnerSpec, n: usize, grid: Vec<usize>, replications: usize, seed: u64) -> Self {
        SimulationConfig {
            dgp,
            learner,
            n,
            grid,
            alpha: 0.05,
            variance_mode: VarianceMode::ExactDifference,
            regime_threshold: DEFAULT_REGIME_THRESHOLD,
            replications,
            seed,
            oracle: OracleMethod::ClosedForm,
        }
    }

    fn ess_config(&self, seed: u64) -> EssConfig {
        EssConfig {
            loss: self.dgp.loss(),
            alpha: self.alpha,
            variance_mode: self.variance_mode,
            regime_threshold: self.regime_threshold,
            seed,
            shuffle: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(EssError::config("replications must be positive"));
        }
        self.learner.validate()?;
        TrainingGrid::new(self.grid.clone())?.check_feasible(self.n)
    }
}

/// One replication of the sequential procedure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepOutcome {
    pub n_hat: usize,
    pub exhausted: bool,
    /// `(N_k, rejected, LB_k)` for the executed steps.
    pub steps: Vec<(usize, bool, f64)>,
    pub duality_ok: bool,
    /// On grids `1..=K`: `n_hat == min{N_k : LB_k <= 0}` (or `N_K + 1`).
    pub fine_grid_ok: Option<bool>,
}

fn is_fine(grid: &[usize]) -> bool {
    grid.iter().enumerate().all(|(i, &n)| n == i + 1)
}

/// Runs the sequential procedure on every replication of `config` with the
/// given grid (which may differ from `config.grid`).
pub fn run_replications(config: &SimulationConfig, grid: &[usize]) -> Result<Vec<RepOutcome>> {
    config.validate()?;
    let tg = TrainingGrid::new(grid.to_vec())?;
    tg.check_feasible(config.n)?;
    let fine = is_fine(grid);
    let outs: Vec<Result<RepOutcome>> = (0..config.replications)
        .into_par_iter()
        .map(|r| {
            let seed = replication_seed(config.seed, r);
            let data = config.dgp.sample(config.n, seed)?;
            let res = sequential_ess(&data, &config.learner, &tg, &config.ess_config(seed))?;
            let steps: Vec<(usize, bool, f64)> = res
                .steps
                .iter()
                .map(|s| (s.train_size, s.rejected, s.lower_bound))
                .collect();
            let duality_ok = steps.iter().all(|&(_, rej, lb)| rej == (lb > 0.0));
            let fine_grid_ok = fine.then(|| {
                let first = steps.iter().find(|s| s.2 <= 0.0).map(|s| s.0);
                res.n_hat == first.unwrap_or(grid[grid.len() - 1] + 1)
            });
            Ok(RepOutcome {
                n_hat: res.n_hat,
                exhausted: res.exhausted,
                steps,
                duality_ok,
                fine_grid_ok,
            })
        })
        .collect();
    outs.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config_digest: String,
    pub replications: usize,
    pub estimate: f64,
    pub mc_se: f64,
    pub nominal: f64,
    /// Lower (`AtLeast`) or upper (`AtMost`) acceptance bound.
    pub bound: f64,
    pub pass: bool,
    pub duality_violations: usize,
    pub details: BTreeMap<String, serde_json::Value>,
}

fn duality_violations(outs: &[RepOutcome]) -> usize {
    outs.iter()
        .filter(|o| !o.duality_ok || o.fine_grid_ok == Some(false))
        .count()
}

/// Fraction of replications with `N_hat <= N*`.
pub fn coverage_from(outs: &[RepOutcome], n_star: Option<usize>) -> f64 {
    let hits = outs
        .iter()
        .filter(|o| n_star.is_none_or(|s| o.n_hat <= s))
        .count();
    hits as f64 / outs.len() as f64
}

pub fn coverage_experiment(config: &SimulationConfig) -> Result<ExperimentReport> {
    let oracle = oracle_curve(&config.dgp, &config.learner, &config.grid, &config.oracle, config.seed)?;
    let outs = run_replications(config, &config.grid)?;
    Ok(coverage_report("coverage", config, &oracle, &outs))
}

fn coverage_report(name: &str, config: &SimulationConfig, oracle: &OracleCurve, outs: &[RepOutcome]) -> ExperimentReport {
    let r = outs.len();
    let p = coverage_from(outs, oracle.n_star());
    let se = proportion_mc_se(p, r);
    let nominal = 1.0 - config.alpha;
    let bound = nominal - 3.0 * se;
    let mut details = BTreeMap::new();
    details.insert("n_star".into(), serde_json::json!(oracle.n_star()));
    details.insert("e_rule".into(), serde_json::json!(oracle.e_rule));
    details.insert("grid".into(), serde_json::json!(config.grid));
    details.insert(
        "mean_n_hat".into(),
        serde_json::json!(outs.iter().map(|o| o.n_hat as f64).sum::<f64>() / r as f64),
    );
    ExperimentReport {
        experiment: name.into(),
        config_digest: config_digest(config),
        replications: r,
        estimate: p,
        mc_se: se,
        nominal,
        bound,
        pass: p >= bound,
        duality_violations: duality_violations(outs),
        details,
    }
}

/// Probability of rejecting the first true null `H_{0,k*}`, which for the
/// sequential rule equals the probability of any false rejection.
pub fn fwer_experiment(config: &SimulationConfig) -> Result<ExperimentReport> {
    let oracle = oracle_curve(&config.dgp, &config.learner, &config.grid, &config.oracle, config.seed)?;
    let outs = run_replications(config, &config.grid)?;
    let r = outs.len();
    let p = match oracle.k_star {
        None => 0.0,
        Some(k) => {
            let n_k = config.grid[k];
            outs.iter()
                .filter(|o| o.steps.iter().any(|&(n, rej, _)| n == n_k && rej))
                .count() as f64
                / r as f64
        }
    };
    let se = proportion_mc_se(p, r);
    let bound = config.alpha + 3.0 * se;
    let mut details = BTreeMap::new();
    details.insert("k_star".into(), serde_json::json!(oracle.k_star.map(|k| k + 1)));
    details.insert("grid".into(), serde_json::json!(config.grid));
    Ok(ExperimentReport {
        experiment: "fwer".into(),
        config_digest: config_digest(config),
        replications: r,
        estimate: p,
        mc_se: se,
        nominal: config.alpha,
        bound,
        pass: p <= bound,
        duality_violations: duality_violations(&outs),
        details,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridComparison {
    pub fine: ExperimentReport,
    pub coarse: ExperimentReport,
    /// Replications where the coarse bound exceeds the fine bound.
    pub coarse_above_fine: usize,
}

/// Coverage on the config grid (fine) and on `coarse`, from the same
/// replications, plus the per-replication ordering check.
pub fn grid_comparison(config: &SimulationConfig, coarse: &[usize]) -> Result<GridComparison> {
    let oracle_f = oracle_curve(&config.dgp, &config.learner, &config.grid, &config.oracle, config.seed)?;
    let oracle_c = oracle_curve(&config.dgp, &config.learner, coarse, &config.oracle, config.seed)?;
    let fine = run_replications(config, &config.grid)?;
    let crs = run_replications(config, coarse)?;
    let coarse_above_fine = fine.iter().zip(&crs).filter(|(f, c)| c.n_hat > f.n_hat).count();
    let mut coarse_cfg = config.clone();
    coarse_cfg.grid = coarse.to_vec();
    let mut coarse_report = coverage_report("coverage_coarse", &coarse_cfg, &oracle_c, &crs);
    // coverage is judged against the same crossing point on both grids
    if oracle_f.n_star() != oracle_c.n_star() && oracle_f.n_star_exact.is_some() {
        coarse_report = coverage_report("coverage_coarse", &coarse_cfg, &oracle_f, &crs);
    }
    Ok(GridComparison {
        fine: coverage_report("coverage_fine", config, &oracle_f, &fine),
        coarse: coarse_report,
        coarse_above_fine,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltConfig {
    pub dgp: Dgp,
    pub learner: LearnerSpec,
    pub n: usize,
    pub train_size: usize,
    pub replications: usize,
    pub seed: u64,
    /// Two-sided level of the risk intervals.
    pub alpha: f64,
    /// Variance regime; `None` picks by the default threshold.
    pub regime: Option<Regime>,
    pub oracle: OracleMethod,
}

/// Per-replication CV risk and its variance estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CvDraw {
    pub e_cv: f64,
    pub sigma2: f64,
    pub n_effective: usize,
}

pub fn cv_draws(
    dgp: &Dgp,
    learner: &LearnerSpec,
    n: usize,
    train_size: usize,
    regime: Regime,
    replications: usize,
    seed: u64,
) -> Result<Vec<CvDraw>> {
    let loss = dgp.loss();
    let outs: Vec<Result<CvDraw>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let s = replication_seed(seed, r);
            let data = dgp.sample(n, s)?;
            let part = partition_blocks(n, train_size, s)?;
            let target = TargetLoss(loss);
            let cv = block_out_cv_with(
                &data,
                learner,
                &part,
                &[&target],
                CvOptions {
                    seed: s,
                    retain_losses: false,
                },
            )?
            .remove(0);
            let v = variance_for_regime(&cv, regime)?;
            Ok(CvDraw {
                e_cv: cv.e_cv,
                sigma2: v.sigma2,
                n_effective: cv.n_effective,
            })
        })
        .collect();
    outs.into_iter().collect()
}

/// Kolmogorov-Smirnov distance between a sample and the standard normal.
pub fn ks_distance_normal(sample: &[f64]) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len() as f64;
    let phi = Normal::standard();
    s.iter()
        .enumerate()
        .map(|(i, &t)| {
            let f = phi.cdf(t);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Coverage of two-sided z-intervals for `e_N` and the KS distance of the
/// studentized statistic. Refuses configurations whose variance is zero.
pub fn clt_experiment(config: &CltConfig) -> Result<ExperimentReport> {
    let oracle = oracle_curve(&config.dgp, &config.learner, &[config.train_size], &config.oracle, config.seed)?;
    let e_n = oracle.points[0].risk;
    let regime = config
        .regime
        .unwrap_or_else(|| select_regime(config.train_size, DEFAULT_REGIME_THRESHOLD));
    let pilot = cv_draws(
        &config.dgp,
        &config.learner,
        config.n,
        config.train_size,
        regime,
        1,
        derive_seed(config.seed, &[tag::ORACLE]),
    )?;
    if !(pilot[0].sigma2 > 0.0) {
        return Err(EssError::Numeric(
            "CLT experiment needs a positive asymptotic variance; the pilot estimate is zero".into(),
        ));
    }
    let draws = cv_draws(
        &config.dgp,
        &config.learner,
        config.n,
        config.train_size,
        regime,
        config.replications,
        config.seed,
    )?;
    let z = z_quantile(1.0 - config.alpha / 2.0);
    let mut stats = Vec::with_capacity(draws.len());
    let mut hits = 0usize;
    for d in &draws {
        let se = (d.sigma2 / d.n_effective as f64).sqrt();
        let t = if se > 0.0 { (d.e_cv - e_n) / se } else { f64::INFINITY };
        if t.abs() <= z {
            hits += 1;
        }
        stats.push(t);
    }
    let r = draws.len();
    let p = hits as f64 / r as f64;
    let se = proportion_mc_se(p, r);
    let nominal = 1.0 - config.alpha;
    let mut details = BTreeMap::new();
    details.insert("ks_distance".into(), serde_json::json!(ks_distance_normal(&stats)));
    details.insert("e_n".into(), serde_json::json!(e_n));
    details.insert("regime".into(), serde_json::json!(regime));
    Ok(ExperimentReport {
        experiment: "clt".into(),
        config_digest: config_digest(config),
        replications: r,
        estimate: p,
        mc_se: se,
        nominal,
        bound: 3.0 * se,
        pass: (p - nominal).abs() <= 3.0 * se,
        duality_violations: 0,
        details,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceConfig {
    pub dgp: Dgp,
    pub learner: LearnerSpec,
    pub n: usize,
    pub train_size: usize,
    pub replications: usize,
    pub seed: u64,
    /// Reference value of the asymptotic variance; the Monte Carlo variance
    /// of `sqrt(n) (e_cv - e_N)` over the replications is used otherwise.
    pub truth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceReport {
    pub config_digest: String,
    pub n: usize,
    pub replications: usize,
    pub reference: f64,
    pub mean_sigma2: f64,
    /// `|mean(sigma_hat^2) / reference - 1|`.
    pub relative_error: f64,
    /// Root mean square of `sigma_hat^2 / reference - 1` over replications.
    pub rms_relative_error: f64,
    pub mc_variance: f64,
}

pub fn variance_consistency(config: &VarianceConfig) -> Result<VarianceReport> {
    let draws = cv_draws(
        &config.dgp,
        &config.learner,
        config.n,
        config.train_size,
        Regime::FixedN,
        config.replications,
        config.seed,
    )?;
    let n_eff = draws[0].n_effective as f64;
    let e: Vec<f64> = draws.iter().map(|d| d.e_cv).collect();
    let mc_variance = n_eff * crate::variance::sample_variance(&e);
    let reference = config.truth.unwrap_or(mc_variance);
    if !(reference > 0.0) {
        return Err(EssError::Numeric("reference variance must be positive".into()));
    }
    let rel: Vec<f64> = draws.iter().map(|d| d.sigma2 / reference - 1.0).collect();
    let mean_sigma2 = mean(&draws.iter().map(|d| d.sigma2).collect::<Vec<_>>());
    Ok(VarianceReport {
        config_digest: config_digest(config),
        n: config.n,
        replications: draws.len(),
        reference,
        mean_sigma2,
        relative_error: (mean_sigma2 / reference - 1.0).abs(),
        rms_relative_error: mean(&rel.iter().map(|v| v * v).collect::<Vec<_>>()).sqrt(),
        mc_variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mc_se_formula() {
        assert!((proportion_mc_se(0.95, 1000) - (0.95f64 * 0.05 / 1000.0).sqrt()).abs() < 1e-15);
        let a = proportion_mc_se(0.9, 250);
        let b = proportion_mc_se(0.9, 1000);
        let c = proportion_mc_se(0.9, 4000);
        assert!((a / b - 2.0).abs() < 1e-12 && (b / c - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ks_of_quantiles_is_small() {
        let phi = Normal::standard();
        let s: Vec<f64> = (1..1000).map(|i| phi.inverse_cdf(i as f64 / 1000.0)).collect();
        assert!(ks_distance_normal(&s) < 0.002);
    }

    #[test]
    fn closed_form_crossing() {
        let dgp = Dgp::PureNoise {
            mean: 0.0,
            sd: 1.0,
            rule_bias: (1.0f64 / 3.0).sqrt(),
        };
        let oc = oracle_curve(
            &dgp,
            &LearnerSpec::new(Family::BaselineMean),
            &[1, 2, 5, 10],
            &OracleMethod::ClosedForm,
            0,
        )
        .unwrap();
        assert_eq!(oc.n_star(), Some(3));
        assert_eq!(oc.k_star, Some(2));
        assert_eq!(oc.n_star_lower, 3);
    }

    #[test]
    fn oracle_risk_for_mean_learner() {
        let dgp = Dgp::PureNoise {
            mean: 0.0,
            sd: 1.0,
            rule_bias: 0.0,
        };
        let p = oracle_risk(&dgp, &LearnerSpec::new(Family::BaselineMean), 4, 2000, 200, 1).unwrap();
        assert!((p.risk - 1.25).abs() < 3.0 * p.mc_se, "{p:?}");
        assert!(oracle_risk(&dgp, &LearnerSpec::new(Family::BaselineMean), 4, 50, 10, 1).is_err());
    }

    #[test]
    fn unbeatable_rule_gives_full_coverage() {
        let dgp = Dgp::PureNoise {
            mean: 0.0,
            sd: 1.0,
            rule_bias: 0.0,
        };
        let cfg = SimulationConfig::new(dgp, LearnerSpec::new(Family::BaselineMean), 200, vec![2, 5], 20, 3);
        let rep = coverage_experiment(&cfg).unwrap();
        assert_eq!(rep.estimate, 1.0);
        assert!(rep.pass);
        let f = fwer_experiment(&cfg).unwrap();
        assert_eq!(f.estimate, 0.0);
    }

    #[test]
    fn zero_variance_clt_is_refused() {
        let dgp = Dgp::PureNoise {
            mean: 1.0,
            sd: 0.0,
            rule_bias: 0.0,
        };
        let cfg = CltConfig {
            dgp,
            learner: LearnerSpec::new(Family::BaselineMean),
            n: 60,
            train_size: 3,
            replications: 10,
            seed: 0,
            alpha: 0.05,
            regime: None,
            oracle: OracleMethod::ClosedForm,
        };
        assert!(matches!(clt_experiment(&cfg), Err(EssError::Numeric(_))));
    }
}
