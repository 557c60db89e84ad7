//! L1-penalized least squares by cyclic coordinate descent.
//!
//! Minimizes `(1/2m) ||y - b0 - X beta||^2 + lambda ||beta||_1` with an
//! unpenalized intercept. Matrices are row-major `m x p`.

use crate::error::{EssError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub coef: Vec<f64>,
    pub iterations: usize,
}

impl LinearFit {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(row).map(|(b, x)| b * x).sum::<f64>()
    }
}

pub const MAX_SWEEPS: usize = 100_000;

struct Centered {
    cols: Vec<Vec<f64>>,
    col_means: Vec<f64>,
    col_sq: Vec<f64>,
    y: Vec<f64>,
    y_mean: f64,
}

fn center(x: &[f64], y: &[f64], p: usize) -> Centered {
    let m = y.len();
    assert_eq!(x.len(), m * p, "design matrix shape");
    let y_mean = y.iter().sum::<f64>() / m as f64;
    let mut cols = Vec::with_capacity(p);
    let mut col_means = Vec::with_capacity(p);
    let mut col_sq = Vec::with_capacity(p);
    for j in 0..p {
        let mean = (0..m).map(|i| x[i * p + j]).sum::<f64>() / m as f64;
        let col: Vec<f64> = (0..m).map(|i| x[i * p + j] - mean).collect();
        col_sq.push(col.iter().map(|v| v * v).sum::<f64>());
        col_means.push(mean);
        cols.push(col);
    }
    Centered {
        cols,
        col_means,
        col_sq,
        y: y.iter().map(|v| v - y_mean).collect(),
        y_mean,
    }
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Smallest penalty at which every coefficient is zero.
pub fn lambda_max(x: &[f64], y: &[f64], p: usize) -> f64 {
    let c = center(x, y, p);
    let m = y.len() as f64;
    c.cols
        .iter()
        .map(|col| (col.iter().zip(&c.y).map(|(a, b)| a * b).sum::<f64>() / m).abs())
        .fold(0.0, f64::max)
}

/// Largest violation of the subgradient optimality conditions at `fit`.
pub fn kkt_violation(x: &[f64], y: &[f64], p: usize, fit: &LinearFit, lambda: f64) -> f64 {
    let m = y.len();
    let resid: Vec<f64> = (0..m)
        .map(|i| y[i] - fit.predict(&x[i * p..(i + 1) * p]))
        .collect();
    let mut worst = (resid.iter().sum::<f64>() / m as f64).abs();
    for j in 0..p {
        let g = (0..m).map(|i| x[i * p + j] * resid[i]).sum::<f64>() / m as f64;
        let b = fit.coef[j];
        let v = if b != 0.0 {
            (g - lambda * b.signum()).abs()
        } else {
            (g.abs() - lambda).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

pub fn objective(x: &[f64], y: &[f64], p: usize, fit: &LinearFit, lambda: f64) -> f64 {
    let m = y.len();
    let rss: f64 = (0..m)
        .map(|i| (y[i] - fit.predict(&x[i * p..(i + 1) * p])).powi(2))
        .sum();
    rss / (2.0 * m as f64) + lambda * fit.coef.iter().map(|b| b.abs()).sum::<f64>()
}

/// Coordinate descent, optionally warm-started. Converged when a sweep moves
/// no coefficient appreciably and the KKT residual is below tolerance.
pub fn lasso_cd(
    x: &[f64],
    y: &[f64],
    p: usize,
    lambda: f64,
    warm: Option<&[f64]>,
) -> Result<LinearFit> {
    if y.is_empty() {
        return Err(EssError::invalid("lasso needs at least one row"));
    }
    if !(lambda >= 0.0) {
        return Err(EssError::invalid(format!("lasso penalty must be >= 0, got {lambda}")));
    }
    let m = y.len() as f64;
    let c = center(x, y, p);
    let mut beta = match warm {
        Some(w) => w.to_vec(),
        None => vec![0.0; p],
    };
    let mut resid = c.y.clone();
    for (j, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            for (r, v) in resid.iter_mut().zip(&c.cols[j]) {
                *r -= v * b;
            }
        }
    }
    let y_rms = (c.y.iter().map(|v| v * v).sum::<f64>() / m).sqrt();
    let x_rms = c.col_sq.iter().map(|s| (s / m).sqrt()).fold(0.0, f64::max);
    let kkt_tol = 1e-9 * (1.0 + y_rms * x_rms);
    let step_tol = 1e-12 * (1.0 + y_rms);

    let mut last_change = f64::INFINITY;
    for sweep in 1..=MAX_SWEEPS {
        let mut max_change = 0.0f64;
        for j in 0..p {
            let sq = c.col_sq[j];
            if sq <= 0.0 {
                beta[j] = 0.0;
                continue;
            }
            let col = &c.cols[j];
            let old = beta[j];
            let rho = col.iter().zip(&resid).map(|(a, r)| a * r).sum::<f64>() / m + sq / m * old;
            let new = soft_threshold(rho, lambda) / (sq / m);
            if new != old {
                let d = new - old;
                for (r, v) in resid.iter_mut().zip(col) {
                    *r -= v * d;
                }
                beta[j] = new;
                max_change = max_change.max(d.abs() * (sq / m).sqrt());
            }
        }
        last_change = max_change;
        if max_change <= step_tol {
            let fit = finish(&c, &beta, sweep);
            if kkt_violation(x, y, p, &fit, lambda) <= kkt_tol {
                return Ok(fit);
            }
            // refresh the residual to shed accumulated rounding error
            resid.clone_from(&c.y);
            for (j, &b) in beta.iter().enumerate() {
                for (r, v) in resid.iter_mut().zip(&c.cols[j]) {
                    *r -= v * b;
                }
            }
        }
    }
    Err(EssError::NonConvergence {
        solver: "lasso coordinate descent",
        iterations: MAX_SWEEPS,
        last_change,
    })
}

fn finish(c: &Centered, beta: &[f64], iterations: usize) -> LinearFit {
    let intercept = c.y_mean - c.col_means.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>();
    LinearFit {
        intercept,
        coef: beta.to_vec(),
        iterations,
    }
}

/// Geometric penalty path from `lambda_max` down `decades` orders of
/// magnitude, `len` values, largest first.
pub fn lambda_path(lmax: f64, len: usize, decades: f64) -> Vec<f64> {
    if len == 1 || lmax <= 0.0 {
        return vec![lmax; len.max(1)];
    }
    (0..len)
        .map(|i| lmax * 10f64.powf(-decades * i as f64 / (len - 1) as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn large_penalty_gives_intercept_only() {
        let x = [1.0, 0.0, 2.0, 1.0, 3.0, 5.0, 4.0, 2.0];
        let y = [1.0, 2.0, 4.0, 9.0];
        let lmax = lambda_max(&x, &y, 2);
        let fit = lasso_cd(&x, &y, 2, lmax * 1.0001, None).unwrap();
        assert_eq!(fit.coef, vec![0.0, 0.0]);
        assert!((fit.intercept - 4.0).abs() < 1e-12);
        let fit = lasso_cd(&x, &y, 2, 1e300, None).unwrap();
        assert_eq!(fit.coef, vec![0.0, 0.0]);
        assert!((fit.intercept - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_penalty_recovers_least_squares() {
        // y = 1 + 2 x exactly
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let fit = lasso_cd(&x, &y, 1, 0.0, None).unwrap();
        assert!((fit.coef[0] - 2.0).abs() < 1e-9);
        assert!((fit.intercept - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_feature_matches_closed_form() {
        // with one centered feature the solution is S(x'y/m, lambda)/(x'x/m)
        let x = [-1.0, 0.0, 1.0];
        let y = [0.0, 1.0, 5.0];
        let lambda = 0.5;
        let fit = lasso_cd(&x, &y, 1, lambda, None).unwrap();
        let xy = 5.0 / 3.0;
        let xx = 2.0 / 3.0;
        assert!((fit.coef[0] - (xy - lambda) / xx).abs() < 1e-12);
    }

    #[test]
    fn path_spans_three_decades() {
        let p = lambda_path(2.0, 20, 3.0);
        assert_eq!(p.len(), 20);
        assert_eq!(p[0], 2.0);
        assert!((p[19] - 0.002).abs() < 1e-15);
    }
}
