use ess_core::learners::lasso::{kkt_violation, lambda_max, lasso_cd, objective};
use ess_core::learners::logit::{logit_l1, objective as logit_objective};
use ess_core::learners::{Family, Hyperparameters, Learner, LearnerSpec};
use ess_core::seeds::rng;
use ess_core::{Dataset, Outcome};
use rand::Rng;
use rand_distr::StandardNormal;

fn problem(r: &mut ess_core::seeds::Rng, m: usize, p: usize) -> (Vec<f64>, Vec<f64>) {
    let x: Vec<f64> = (0..m * p).map(|_| r.sample(StandardNormal)).collect();
    let beta: Vec<f64> = (0..p).map(|j| if j % 2 == 0 { r.random_range(-2.0..2.0) } else { 0.0 }).collect();
    let y = (0..m)
        .map(|i| 0.5 + (0..p).map(|j| x[i * p + j] * beta[j]).sum::<f64>() + r.sample::<f64, _>(StandardNormal))
        .collect();
    (x, y)
}

/// Proximal gradient on the same objective, run to a tight tolerance.
fn ista(x: &[f64], y: &[f64], p: usize, lambda: f64) -> (f64, Vec<f64>) {
    let m = y.len();
    // Lipschitz bound of the smooth part via the Frobenius norm (intercept column included)
    let lip = (x.iter().map(|v| v * v).sum::<f64>() + m as f64) / m as f64;
    let step = 1.0 / lip;
    let (mut b0, mut b) = (0.0, vec![0.0; p]);
    for _ in 0..200_000 {
        let resid: Vec<f64> = (0..m)
            .map(|i| b0 + (0..p).map(|j| x[i * p + j] * b[j]).sum::<f64>() - y[i])
            .collect();
        let g0 = resid.iter().sum::<f64>() / m as f64;
        let mut moved = (step * g0).abs();
        b0 -= step * g0;
        for j in 0..p {
            let g = (0..m).map(|i| x[i * p + j] * resid[i]).sum::<f64>() / m as f64;
            let z = b[j] - step * g;
            let nb = z.signum() * (z.abs() - step * lambda).max(0.0);
            moved = moved.max((nb - b[j]).abs());
            b[j] = nb;
        }
        if moved < 1e-13 {
            break;
        }
    }
    (b0, b)
}

#[test]
fn lasso_kkt_on_random_problems() {
    let mut r = rng(99);
    for t in 0..100 {
        let m = r.random_range(10..40);
        let p = r.random_range(1..8);
        let (x, y) = problem(&mut r, m, p);
        let lambda = lambda_max(&x, &y, p) * r.random_range(0.01..1.2);
        let fit = lasso_cd(&x, &y, p, lambda, None).unwrap();
        let v = kkt_violation(&x, &y, p, &fit, lambda);
        assert!(v <= 1e-6, "problem {t}: KKT violation {v}");
    }
}

#[test]
fn lasso_matches_proximal_gradient_reference() {
    let mut r = rng(5);
    for _ in 0..20 {
        let (x, y) = problem(&mut r, 30, 4);
        let lambda = lambda_max(&x, &y, 4) * 0.2;
        let fit = lasso_cd(&x, &y, 4, lambda, None).unwrap();
        let (b0, b) = ista(&x, &y, 4, lambda);
        let reference = ess_core::learners::lasso::LinearFit {
            intercept: b0,
            coef: b.clone(),
            iterations: 0,
        };
        let (f1, f2) = (objective(&x, &y, 4, &fit, lambda), objective(&x, &y, 4, &reference, lambda));
        assert!(f1 <= f2 + 1e-10, "{f1} vs {f2}");
        for (a, c) in fit.coef.iter().zip(&b) {
            assert!((a - c).abs() < 1e-6, "{a} vs {c}");
        }
    }
}

#[test]
fn logit_is_not_worse_than_perturbations() {
    let mut r = rng(8);
    let m = 60;
    let p = 3;
    let x: Vec<f64> = (0..m * p).map(|_| r.sample(StandardNormal)).collect();
    let y: Vec<f64> = (0..m)
        .map(|i| {
            let eta = 1.5 * x[i * p] - x[i * p + 1];
            (r.random::<f64>() < 1.0 / (1.0 + (-eta).exp())) as u8 as f64
        })
        .collect();
    let fit = logit_l1(&x, &y, p, 1.0).unwrap();
    let f = logit_objective(&x, &y, p, 1.0, &fit);
    for k in 0..=p {
        for h in [1e-4, -1e-4] {
            let mut g = fit.clone();
            if k == p {
                g.intercept += h;
            } else {
                g.coef[k] += h;
            }
            assert!(logit_objective(&x, &y, p, 1.0, &g) >= f - 1e-9);
        }
    }
}

fn mixed_data(r: &mut ess_core::seeds::Rng, n: usize) -> Dataset {
    let x1: Vec<f64> = (0..n).map(|_| r.sample(StandardNormal)).collect();
    let x2: Vec<f64> = (0..n).map(|_| r.random_range(0.0..10.0)).collect();
    let cat: Vec<String> = (0..n).map(|i| ["a", "b", "c"][i % 3].to_string()).collect();
    let y: Vec<f64> = (0..n).map(|i| 2.0 * x1[i] + 0.3 * x2[i] + r.sample::<f64, _>(StandardNormal)).collect();
    Dataset::builder()
        .numeric("x1", x1)
        .numeric("x2", x2)
        .categorical("g", cat)
        .outcome_numeric("y", y)
        .build()
        .unwrap()
}

/// Same covariates and outcomes on `keep`; everything else replaced.
fn poison(data: &Dataset, keep: &[usize]) -> Dataset {
    let n = data.n();
    let inside = |i: usize| keep.contains(&i);
    let num = data.numeric_columns();
    let x1 = (0..n).map(|i| if inside(i) { num[0].values[i] } else { 1e6 }).collect();
    let x2 = (0..n).map(|i| if inside(i) { num[1].values[i] } else { -1e6 }).collect();
    let cat = &data.categorical_columns()[0];
    let g = (0..n)
        .map(|i| if inside(i) { cat.levels.label(cat.codes[i]).to_string() } else { "zzz".into() })
        .collect();
    let yv = data.outcome().as_real().unwrap();
    let y = (0..n).map(|i| if inside(i) { yv[i] } else { 1e9 }).collect();
    Dataset::builder()
        .numeric("x1", x1)
        .numeric("x2", x2)
        .categorical("g", g)
        .outcome_numeric("y", y)
        .build()
        .unwrap()
}

#[test]
fn trained_rules_only_see_their_block() {
    let mut r = rng(31);
    let data = mixed_data(&mut r, 80);
    let train: Vec<usize> = (10..40).collect();
    let bad = poison(&data, &train);
    let probe: Vec<usize> = (0..80).collect();
    for family in [Family::Lasso, Family::RandomForest, Family::Knn, Family::BaselineMean] {
        let mut spec = LearnerSpec::new(family);
        spec.tuning.forest_trees = 20;
        let hp = spec.tune(&data, &train, 3).unwrap();
        assert_eq!(hp, spec.tune(&bad, &train, 3).unwrap(), "{family} tuning leaked");
        let a = spec.train(&data, &train, &hp, 4, Some(0)).unwrap();
        let b = spec.train(&bad, &train, &hp, 4, Some(0)).unwrap();
        let mut pa = vec![Outcome::Real(0.0); probe.len()];
        let mut pb = pa.clone();
        // predictions are compared on the clean covariates
        a.predict_rows(&data, &probe, &mut pa);
        b.predict_rows(&data, &probe, &mut pb);
        assert_eq!(pa, pb, "{family} training leaked");
    }
}

#[test]
fn forest_is_deterministic_given_seed() {
    let mut r = rng(12);
    let data = mixed_data(&mut r, 60);
    let rows: Vec<usize> = (0..30).collect();
    let mut spec = LearnerSpec::new(Family::RandomForest);
    spec.tuning.forest_trees = 15;
    let hp = Hyperparameters::RandomForest {
        max_depth: Some(5),
        min_leaf: 2,
    };
    let a = spec.train(&data, &rows, &hp, 9, None).unwrap();
    let b = spec.train(&data, &rows, &hp, 9, None).unwrap();
    let all: Vec<usize> = (0..60).collect();
    let mut pa = vec![Outcome::Real(0.0); 60];
    let mut pb = pa.clone();
    a.predict_rows(&data, &all, &mut pa);
    b.predict_rows(&data, &all, &mut pb);
    assert_eq!(pa, pb);
}

#[test]
fn baseline_mean_risk_matches_closed_form() {
    // E[(Ybar_N - Y)^2] = s^2 (1 + 1/N) for fresh Y
    let mut r = rng(77);
    let spec = LearnerSpec::new(Family::BaselineMean);
    for n_train in [2usize, 4, 8] {
        let reps = 20_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..reps {
            let y: Vec<f64> = (0..n_train + 1).map(|_| 3.0 + 2.0 * r.sample::<f64, _>(StandardNormal)).collect();
            let data = Dataset::builder()
                .numeric("x", vec![0.0; n_train + 1])
                .outcome_numeric("y", y.clone())
                .build()
                .unwrap();
            let rows: Vec<usize> = (0..n_train).collect();
            let rule = spec.train(&data, &rows, &Hyperparameters::None, 0, None).unwrap();
            let Outcome::Real(pred) = rule.predict_row(&data, n_train) else { unreachable!() };
            let l = (pred - y[n_train]).powi(2);
            sum += l;
            sq += l * l;
        }
        let mean = sum / reps as f64;
        let se = ((sq / reps as f64 - mean * mean) / reps as f64).sqrt();
        let truth = 4.0 * (1.0 + 1.0 / n_train as f64);
        assert!((mean - truth).abs() < 3.0 * se, "N={n_train}: {mean} vs {truth} (se {se})");
    }
}
