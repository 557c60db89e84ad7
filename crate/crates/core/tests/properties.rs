use ess_core::cate::transformed_outcome;
use ess_core::inference::{decide, stopping_rule, z_quantile};
use ess_core::learners::{Family, Hyperparameters, Learner, LearnerSpec};
use ess_core::risk::{block_out_cv_with, difference_loss, BlockPartition, CvOptions, TargetLoss};
use ess_core::rule::{ConstantRule, PredictionRule, Provenance};
use ess_core::variance::{variance_fixed_b, variance_fixed_n, variance_of_difference, Regime, VarianceMode};
use ess_core::{Dataset, LossKind, Outcome, OutcomeType, RiskEstimate};
use proptest::prelude::*;

fn numeric(y: Vec<f64>, pred: Vec<f64>) -> Dataset {
    let n = y.len();
    Dataset::builder()
        .numeric("x", (0..n).map(|i| (i * 7 % 5) as f64).collect())
        .outcome_numeric("y", y)
        .prediction_numeric("rule", pred)
        .build()
        .unwrap()
}

fn cv(data: &Dataset, learner: &dyn Learner, order: Vec<usize>, n_train: usize, loss: LossKind) -> ess_core::BlockCvResult {
    let part = BlockPartition::from_order(order, n_train).unwrap();
    let t = TargetLoss(loss);
    block_out_cv_with(data, learner, &part, &[&t], CvOptions::default()).unwrap().remove(0)
}

/// Ignores its training data entirely.
struct Constant(f64);

impl Learner for Constant {
    fn name(&self) -> String {
        "constant".into()
    }
    fn check_outcome(&self, _ty: OutcomeType) -> ess_core::Result<()> {
        Ok(())
    }
    fn tune(&self, _d: &Dataset, _r: &[usize], _s: u64) -> ess_core::Result<Hyperparameters> {
        Ok(Hyperparameters::None)
    }
    fn train(
        &self,
        _d: &Dataset,
        _r: &[usize],
        _h: &Hyperparameters,
        _s: u64,
        _b: Option<usize>,
    ) -> ess_core::Result<Box<dyn PredictionRule>> {
        Ok(Box::new(ConstantRule::new(Outcome::Real(self.0), Provenance::FixedRule)))
    }
}

fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, usize, Vec<usize>)> {
    (6usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(-10.0f64..10.0, n),
            prop::collection::vec(-10.0f64..10.0, n),
            1usize..=n / 2,
            Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn relabeling_rows_leaves_the_estimate_unchanged((y, p, n_train, order) in instance()) {
        let data = numeric(y.clone(), p.clone());
        let learner = LearnerSpec::new(Family::BaselineMean);
        let a = cv(&data, &learner, order.clone(), n_train, LossKind::Squared);
        // move row order[k] to position k; the permuted data in identity order has the same blocks
        let y2: Vec<f64> = order.iter().map(|&r| y[r]).collect();
        let p2: Vec<f64> = order.iter().map(|&r| p[r]).collect();
        let b = cv(&numeric(y2, p2), &learner, (0..y.len()).collect(), n_train, LossKind::Squared);
        prop_assert_eq!(a.e_cv, b.e_cv);
        prop_assert_eq!(a.mu_hat, b.mu_hat);
    }

    #[test]
    fn reconstruction_and_clipping((y, p, n_train, order) in instance()) {
        let data = numeric(y, p);
        let c = cv(&data, &LearnerSpec::new(Family::BaselineMean), order, n_train, LossKind::Squared);
        let v = variance_fixed_n(&c).unwrap();
        let k = v.components.unwrap();
        let raw = n_train as f64 * k.v_train + k.v_test + 2.0 * n_train as f64 * k.c;
        prop_assert!((v.raw - raw).abs() <= 1e-12 * (1.0 + raw.abs()));
        prop_assert!(v.sigma2 >= 0.0);
        prop_assert_eq!(v.clipped, v.raw < 0.0);
        prop_assert!(variance_fixed_b(&c).unwrap().sigma2 >= 0.0);
    }

    #[test]
    fn fixed_b_equals_the_test_component((y, p, n_train, order) in instance(), c0 in -5.0f64..5.0) {
        // so the regimes coincide exactly when V_train = C = 0
        let data = numeric(y, p);
        for c in [
            cv(&data, &Constant(c0), order.clone(), n_train, LossKind::Squared),
            cv(&data, &LearnerSpec::new(Family::BaselineMean), order.clone(), n_train, LossKind::Squared),
        ] {
            let a = variance_fixed_n(&c).unwrap();
            let b = variance_fixed_b(&c).unwrap();
            let k = a.components.unwrap();
            prop_assert!((k.v_test - b.sigma2).abs() <= 1e-9 * (1.0 + b.sigma2));
        }
    }

    #[test]
    fn difference_loss_identity((y, p, n_train, order) in instance()) {
        let data = numeric(y, p);
        let learner = LearnerSpec::new(Family::BaselineMean);
        let part = BlockPartition::from_order(order, n_train).unwrap();
        let delta = difference_loss(LossKind::Squared, &data).unwrap();
        let t = TargetLoss(LossKind::Squared);
        let out = block_out_cv_with(&data, &learner, &part, &[&t, &delta], CvOptions::default()).unwrap();
        let rule: f64 = out[0].rows.iter().map(|&r| delta.rule_losses()[r]).sum::<f64>() / out[0].n_effective as f64;
        let lhs = out[1].e_cv;
        let rhs = out[0].e_cv - rule;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + out[0].e_cv.abs()));
    }

    #[test]
    fn zero_one_quantities_are_proportions(
        labels in prop::collection::vec(0u8..3, 8..30),
        preds in prop::collection::vec(0u8..3, 30),
        n_train in 1usize..4,
    ) {
        let n = labels.len();
        let data = Dataset::builder()
            .numeric("x", (0..n).map(|i| i as f64).collect())
            .outcome_labels("y", labels.iter().map(|l| l.to_string()).collect())
            .prediction_labels("rule", preds[..n].iter().map(|l| l.to_string()).collect())
            .build()
            .unwrap();
        let c = cv(&data, &LearnerSpec::new(Family::BaselineMajority), (0..n).collect(), n_train, LossKind::ZeroOne);
        prop_assert!((0.0..=1.0).contains(&c.e_cv));
        prop_assert!(c.block_risks.iter().chain(&c.mu_hat).all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn conservative_dominates_exact_under_nonnegative_covariance((y, _p, n_train, order) in instance()) {
        // rule losses comonotone with the learner's: rule prediction at the global mean
        let m = y.iter().sum::<f64>() / y.len() as f64;
        let data = numeric(y.clone(), vec![m; y.len()]);
        let learner = LearnerSpec::new(Family::BaselineMean);
        let part = BlockPartition::from_order(order, n_train).unwrap();
        let delta = difference_loss(LossKind::Squared, &data).unwrap();
        let t = TargetLoss(LossKind::Squared);
        let out = block_out_cv_with(&data, &learner, &part, &[&t, &delta], CvOptions::default()).unwrap();
        let rule_kept: Vec<f64> = out[0].rows.iter().map(|&r| delta.rule_losses()[r]).collect();
        let cov = {
            let a = &out[0].mu_hat;
            let ma = a.iter().sum::<f64>() / a.len() as f64;
            let mb = rule_kept.iter().sum::<f64>() / a.len() as f64;
            a.iter().zip(&rule_kept).map(|(x, z)| (x - ma) * (z - mb)).sum::<f64>()
        };
        prop_assume!(cov >= 0.0);
        let exact = variance_of_difference(&out[1], VarianceMode::ExactDifference, None, Regime::FixedB).unwrap();
        let cons = variance_of_difference(&out[0], VarianceMode::ConservativeSum, Some(&rule_kept), Regime::FixedB).unwrap();
        prop_assert!(cons.sigma2 >= exact.sigma2 - 1e-9 * (1.0 + exact.sigma2));
    }

    #[test]
    fn duality_of_the_decision(diff in -5.0f64..5.0, sd in 0.0f64..4.0, n in 2usize..500, alpha in 0.001f64..0.5) {
        let z = z_quantile(1.0 - alpha);
        let d = decide(diff, sd, n, z);
        prop_assert_eq!(d.rejected, d.lower_bound > 0.0);
        if let Some(t) = d.t_stat {
            prop_assert_eq!(d.rejected, t > z || (t - z).abs() < 1e-12 && d.lower_bound > 0.0);
        }
    }

    #[test]
    fn stopping_rule_matches_first_nonrejection(rej in prop::collection::vec(any::<bool>(), 1..12)) {
        let grid: Vec<usize> = (1..=rej.len()).map(|k| 3 * k).collect();
        let first = rej.iter().position(|r| !r);
        let executed = first.map_or(rej.len(), |k| k + 1);
        let (stop, n_hat, exhausted) = stopping_rule(&grid, &rej[..executed]);
        prop_assert_eq!(stop, first);
        prop_assert_eq!(exhausted, first.is_none());
        let want = match first {
            Some(0) => 1,
            Some(k) => grid[k - 1] + 1,
            None => grid[grid.len() - 1] + 1,
        };
        prop_assert_eq!(n_hat, want);
    }

    #[test]
    fn transformed_outcome_antisymmetry(y in -100.0f64..100.0, pi in 0.01f64..0.99) {
        let a = transformed_outcome(y, 1, pi);
        let b = transformed_outcome(y, 0, 1.0 - pi);
        prop_assert!((a + b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn rmse_delta_method(value in 0.01f64..100.0, se in 0.0f64..5.0) {
        let mse = RiskEstimate { value, se, n_eval: 10, loss: LossKind::Squared, scale: ess_core::loss::MetricScale::Loss };
        let r = mse.to_rmse().unwrap();
        prop_assert!((r.value - value.sqrt()).abs() < 1e-12 * (1.0 + value));
        prop_assert!((r.se - se / (2.0 * value.sqrt())).abs() < 1e-12 * (1.0 + se));
    }
}
