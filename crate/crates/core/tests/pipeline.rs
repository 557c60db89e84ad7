use ess_core::cate::{cate_ess, CateDataset};
use ess_core::learners::{Family, Hyperparameters, Learner, LearnerSpec};
use ess_core::report::curve_report;
use ess_core::rule::{FixedRule, PredictionRule};
use ess_core::simulate::Dgp;
use ess_core::{error_curve, sequential_ess, Dataset, EssConfig, EssError, LossKind, OutcomeType, TrainingGrid};

fn hand(rule: Vec<f64>) -> Dataset {
    Dataset::builder()
        .numeric("x", vec![1.0, 2.0, 3.0, 4.0])
        .outcome_numeric("y", vec![0.0, 2.0, 4.0, 6.0])
        .prediction_numeric("rule", rule)
        .build()
        .unwrap()
}

fn unshuffled() -> EssConfig {
    EssConfig {
        shuffle: false,
        ..Default::default()
    }
}

/// Predicts with the dataset's own fixed-rule column.
struct Mimic;

impl Learner for Mimic {
    fn name(&self) -> String {
        "mimic".into()
    }
    fn check_outcome(&self, _ty: OutcomeType) -> ess_core::Result<()> {
        Ok(())
    }
    fn tune(&self, _d: &Dataset, _r: &[usize], _s: u64) -> ess_core::Result<Hyperparameters> {
        Ok(Hyperparameters::None)
    }
    fn train(
        &self,
        d: &Dataset,
        _r: &[usize],
        _h: &Hyperparameters,
        _s: u64,
        _b: Option<usize>,
    ) -> ess_core::Result<Box<dyn PredictionRule>> {
        Ok(Box::new(FixedRule::for_dataset(d)?))
    }
}

#[test]
fn perfect_rule_is_beaten_by_nobody() {
    let data = hand(vec![0.0, 2.0, 4.0, 6.0]);
    let grid = TrainingGrid::new(vec![2]).unwrap();
    let res = sequential_ess(&data, &LearnerSpec::new(Family::BaselineMean), &grid, &unshuffled()).unwrap();
    let s = &res.steps[0];
    assert_eq!(s.e_cv, 17.0);
    assert_eq!(s.e_rule, 0.0);
    assert_eq!(s.diff, 17.0);
    assert!((s.sigma_hat.powi(2) - 256.0 / 3.0).abs() < 1e-12);
    let t = 17.0 / (256.0f64 / 3.0 / 4.0).sqrt();
    assert!((s.t_stat.unwrap() - t).abs() < 1e-12);
    assert!(s.rejected);
    assert_eq!((res.n_hat, res.exhausted), (3, true));
}

#[test]
fn learner_identical_to_rule_stops_at_one() {
    let data = hand(vec![1.0, 1.0, 5.0, 5.0]);
    let grid = TrainingGrid::new(vec![1, 2]).unwrap();
    let res = sequential_ess(&data, &Mimic, &grid, &unshuffled()).unwrap();
    let s = &res.steps[0];
    assert_eq!(s.diff, 0.0);
    assert!(s.degenerate && s.t_stat.is_none() && !s.rejected);
    assert_eq!(res.n_hat, 1);
    assert_eq!(res.steps.len(), 1);
}

#[test]
fn conservative_mode_on_the_hand_instance() {
    let data = hand(vec![0.0, 2.0, 4.0, 6.0]);
    let grid = TrainingGrid::new(vec![2]).unwrap();
    let cfg = EssConfig {
        variance_mode: ess_core::VarianceMode::ConservativeSum,
        ..unshuffled()
    };
    let res = sequential_ess(&data, &LearnerSpec::new(Family::BaselineMean), &grid, &cfg).unwrap();
    assert!((res.steps[0].sigma_hat.powi(2) - 256.0 / 3.0).abs() < 1e-12);
}

#[test]
fn curve_mode_duality_and_report() {
    let dgp = Dgp::PureNoise {
        mean: 1.0,
        sd: 1.0,
        rule_bias: 0.6,
    };
    let data = dgp.sample(600, 4).unwrap();
    let grid = TrainingGrid::new((1..=10).collect()).unwrap();
    let cfg = EssConfig {
        seed: 4,
        ..Default::default()
    };
    let learner = LearnerSpec::new(Family::BaselineMean);
    let curve = error_curve(&data, &learner, &grid, &cfg).unwrap();
    let seq = sequential_ess(&data, &learner, &grid, &cfg).unwrap();
    assert_eq!(curve.n_hat, seq.n_hat);
    assert_eq!(curve.steps, seq.steps);
    let all = curve.curve.as_ref().unwrap();
    assert_eq!(all.len(), 10);
    for s in all {
        assert_eq!(s.rejected, s.lower_bound > 0.0);
    }
    let first_nonpositive = all.iter().find(|s| s.lower_bound <= 0.0).map_or(11, |s| s.train_size);
    assert_eq!(seq.n_hat, first_nonpositive);
    let rep = curve_report(&curve, "y", "rule", "Mean", LossKind::Squared).unwrap();
    assert_eq!(rep.rows.len(), 10);
    assert_eq!(rep.to_tsv().lines().count(), 11);
    assert!(rep.table_block().contains(&format!("N* ≥ {} with 95% confidence", seq.n_hat)));
}

#[test]
fn grid_feasibility_is_checked_before_compute() {
    let data = hand(vec![0.0; 4]);
    let grid = TrainingGrid::new(vec![1, 3]).unwrap();
    let e = sequential_ess(&data, &LearnerSpec::new(Family::BaselineMean), &grid, &unshuffled()).unwrap_err();
    assert!(matches!(e, EssError::GridInfeasible { train_size: 3, n: 4 }), "{e}");
}

/// Training mean that refuses blocks of two or more rows.
struct Fragile;

impl Learner for Fragile {
    fn name(&self) -> String {
        "fragile".into()
    }
    fn check_outcome(&self, _ty: OutcomeType) -> ess_core::Result<()> {
        Ok(())
    }
    fn tune(&self, _d: &Dataset, _r: &[usize], _s: u64) -> ess_core::Result<Hyperparameters> {
        Ok(Hyperparameters::None)
    }
    fn train(
        &self,
        d: &Dataset,
        r: &[usize],
        h: &Hyperparameters,
        s: u64,
        b: Option<usize>,
    ) -> ess_core::Result<Box<dyn PredictionRule>> {
        if r.len() >= 2 {
            return Err(EssError::Numeric("refused".into()));
        }
        LearnerSpec::new(Family::BaselineMean).train(d, r, h, s, b)
    }
}

#[test]
fn failing_step_keeps_completed_steps() {
    let y: Vec<f64> = (0..40).map(|i| i as f64).collect();
    let data = Dataset::builder()
        .numeric("x", y.clone())
        .outcome_numeric("y", y.clone())
        .prediction_numeric("rule", y)
        .build()
        .unwrap();
    let grid = TrainingGrid::new(vec![1, 2]).unwrap();
    match sequential_ess(&data, &Fragile, &grid, &EssConfig::default()).unwrap_err() {
        EssError::SequentialAborted {
            train_size,
            completed,
            source,
        } => {
            assert_eq!(train_size, 2);
            assert_eq!(completed.len(), 1);
            assert!(completed[0].rejected);
            assert!(matches!(*source, EssError::BlockTraining { block: 0, train_size: 2, .. }));
        }
        other => panic!("{other}"),
    }
}

#[test]
fn transformed_outcome_tracks_the_cate_by_bin() {
    let dgp = Dgp::Rct {
        x_mean: 2.0,
        tau_slope: 2.0,
        noise_sd: 1.0,
        propensity: 0.5,
        g_slope: 1.0,
    };
    let raw = dgp.sample_raw(200_000, 17).unwrap();
    let x = &raw.numeric_columns()[0].values;
    let ytil = CateDataset::new(raw.clone(), 0.01).unwrap().transformed().unwrap();
    let edges = [f64::NEG_INFINITY, 1.0, 2.0, 3.0, f64::INFINITY];
    for w in edges.windows(2) {
        let idx: Vec<usize> = (0..x.len()).filter(|&i| x[i] >= w[0] && x[i] < w[1]).collect();
        let m = idx.len() as f64;
        let resid: Vec<f64> = idx.iter().map(|&i| ytil[i] - 2.0 * x[i]).collect();
        let mean = resid.iter().sum::<f64>() / m;
        let sd = (resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
        assert!(mean.abs() < 3.0 * sd / m.sqrt(), "bin {w:?}: {mean}");
    }
}

#[test]
fn cate_ess_runs_on_a_trial() {
    let dgp = Dgp::Rct {
        x_mean: 2.0,
        tau_slope: 2.0,
        noise_sd: 1.0,
        propensity: 0.5,
        g_slope: 1.0,
    };
    let raw = dgp.sample_raw(1000, 3).unwrap();
    let cd = CateDataset::new(raw, 0.01).unwrap();
    let grid = TrainingGrid::new(vec![5, 10, 20, 40, 80]).unwrap();
    let res = cate_ess(&cd, &LearnerSpec::new(Family::BaselineMean), &grid, &EssConfig::default()).unwrap();
    assert!(res.n_hat >= 1);
    let s = &res.steps[0];
    assert!((s.e_rule - 29.0).abs() < 5.0, "{}", s.e_rule);
}
