//! Block-out CV against a naive double loop, and the variance estimators
//! against moments recomputed from the loss matrix.

use ess_core::learners::{Family, LearnerSpec};
use ess_core::risk::{block_out_cv_with, BlockPartition, CvOptions, TargetLoss};
use ess_core::seeds::rng;
use ess_core::variance::{variance_fixed_b, variance_fixed_n};
use ess_core::{Dataset, LossKind};
use rand::seq::SliceRandom;
use rand::Rng;

struct Naive {
    e_cv: f64,
    block_risks: Vec<f64>,
    mu_hat: Vec<f64>,
    m_hat: Vec<f64>,
    losses: Vec<Vec<f64>>,
}

/// Training-mean learner evaluated by an explicit loop over (block, position).
fn naive_mean_cv(y: &[f64], order: &[usize], n_train: usize) -> Naive {
    let b = order.len() / n_train;
    let kept = &order[..b * n_train];
    let mut losses = vec![vec![f64::NAN; kept.len()]; b];
    for blk in 0..b {
        let train = &kept[blk * n_train..(blk + 1) * n_train];
        let mut s = 0.0;
        for &r in train {
            s += y[r];
        }
        let pred = s / n_train as f64;
        for (pos, &r) in kept.iter().enumerate() {
            if pos / n_train != blk {
                losses[blk][pos] = (pred - y[r]) * (pred - y[r]);
            }
        }
    }
    let mut block_risks = Vec::new();
    for row in &losses {
        let mut s = 0.0;
        for l in row {
            if !l.is_nan() {
                s += l;
            }
        }
        block_risks.push(s / ((b - 1) * n_train) as f64);
    }
    let mut mu_hat = Vec::new();
    for pos in 0..kept.len() {
        let mut s = 0.0;
        for row in &losses {
            if !row[pos].is_nan() {
                s += row[pos];
            }
        }
        mu_hat.push(s / (b - 1) as f64);
    }
    let m_hat = (0..b)
        .map(|blk| mu_hat[blk * n_train..(blk + 1) * n_train].iter().sum::<f64>() / n_train as f64)
        .collect();
    let e_cv = block_risks.iter().sum::<f64>() / b as f64;
    Naive {
        e_cv,
        block_risks,
        mu_hat,
        m_hat,
        losses,
    }
}

fn dataset(y: &[f64]) -> Dataset {
    Dataset::builder()
        .numeric("x", (0..y.len()).map(|i| i as f64).collect())
        .outcome_numeric("y", y.to_vec())
        .build()
        .unwrap()
}

#[test]
fn random_instances_match_double_loop() {
    let mut r = rng(2024);
    let learner = LearnerSpec::new(Family::BaselineMean);
    for _ in 0..200 {
        let n = r.random_range(4..=12);
        let n_train = if n >= 6 && r.random::<bool>() { 3 } else { 2 };
        let y: Vec<f64> = (0..n).map(|_| (r.random_range(-50..=50) as f64) / 4.0).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut r);
        let data = dataset(&y);
        let part = BlockPartition::from_order(order.clone(), n_train).unwrap();
        let target = TargetLoss(LossKind::Squared);
        let got = block_out_cv_with(
            &data,
            &learner,
            &part,
            &[&target],
            CvOptions {
                seed: 1,
                retain_losses: true,
            },
        )
        .unwrap()
        .remove(0);
        let want = naive_mean_cv(&y, &order, n_train);
        assert_eq!(got.e_cv, want.e_cv);
        assert_eq!(got.block_risks, want.block_risks);
        assert_eq!(got.mu_hat, want.mu_hat);
        assert_eq!(got.m_hat, want.m_hat);
        assert_eq!(got.rows, order[..got.n_effective].to_vec());
        assert_eq!(got.blocks, n / n_train);
        for blk in 0..got.blocks {
            for pos in 0..got.n_effective {
                let (a, b) = (got.loss_at(blk, pos).unwrap(), want.losses[blk][pos]);
                assert!(a == b || (a.is_nan() && b.is_nan()));
            }
        }
    }
}

fn var(x: &[f64]) -> f64 {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

fn cov(x: &[f64], y: &[f64]) -> f64 {
    let mx = x.iter().sum::<f64>() / x.len() as f64;
    let my = y.iter().sum::<f64>() / y.len() as f64;
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (x.len() - 1) as f64
}

#[test]
fn variance_components_from_naive_moments() {
    let mut r = rng(7);
    let learner = LearnerSpec::new(Family::BaselineMean);
    for _ in 0..100 {
        let n = r.random_range(6..=30);
        let n_train = r.random_range(1..=n / 2);
        let y: Vec<f64> = (0..n).map(|_| r.random_range(-3.0..3.0)).collect();
        let order: Vec<usize> = (0..n).collect();
        let data = dataset(&y);
        let part = BlockPartition::from_order(order.clone(), n_train).unwrap();
        let target = TargetLoss(LossKind::Squared);
        let cv = block_out_cv_with(&data, &learner, &part, &[&target], CvOptions::default())
            .unwrap()
            .remove(0);
        let naive = naive_mean_cv(&y, &order, n_train);
        let v_train = var(&naive.block_risks);
        let v_test = var(&naive.mu_hat);
        let c = cov(&naive.block_risks, &naive.m_hat);
        let est = variance_fixed_n(&cv).unwrap();
        let comp = est.components.unwrap();
        let tol = 1e-9 * (1.0 + v_test.abs());
        assert!((comp.v_train - v_train).abs() <= tol);
        assert!((comp.v_test - v_test).abs() <= tol);
        assert!((comp.c - c).abs() <= tol);
        let raw = n_train as f64 * v_train + v_test + 2.0 * n_train as f64 * c;
        assert!((est.raw - raw).abs() <= 1e-9 * (1.0 + raw.abs()));
        assert_eq!(est.sigma2, est.raw.max(0.0));
        assert_eq!(est.clipped, est.raw < 0.0);

        let e = naive.e_cv;
        let tau2 = naive.mu_hat.iter().map(|m| (m - e) * (m - e)).sum::<f64>() / (naive.mu_hat.len() - 1) as f64;
        let fb = variance_fixed_b(&cv).unwrap();
        assert!((fb.sigma2 - tau2).abs() <= 1e-9 * (1.0 + tau2));
    }
}

#[test]
fn hand_instance_moments() {
    let y = [0.0, 2.0, 4.0, 6.0];
    let data = dataset(&y);
    let part = BlockPartition::identity(4, 2).unwrap();
    let target = TargetLoss(LossKind::Squared);
    let cv = block_out_cv_with(
        &data,
        &LearnerSpec::new(Family::BaselineMean),
        &part,
        &[&target],
        CvOptions::default(),
    )
    .unwrap()
    .remove(0);
    assert_eq!(cv.e_cv, 17.0);
    assert_eq!(cv.mu_hat, vec![25.0, 9.0, 9.0, 25.0]);
    let v = variance_fixed_n(&cv).unwrap();
    let c = v.components.unwrap();
    assert_eq!((c.v_train, c.c), (0.0, 0.0));
    assert!((c.v_test - 256.0 / 3.0).abs() < 1e-12);
    assert!((v.sigma2 - 256.0 / 3.0).abs() < 1e-12);
    assert!((variance_fixed_b(&cv).unwrap().sigma2 - 256.0 / 3.0).abs() < 1e-12);
}
