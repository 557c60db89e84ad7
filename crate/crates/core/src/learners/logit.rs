//! L1-penalized logistic regression by accelerated proximal gradient.
//!
//! Minimizes `(1/m) sum logloss(b0 + x'beta, y) + ||beta||_1 / (C m)` with
//! an unpenalized intercept, using FISTA with backtracking and a function
//! value restart.

use super::lasso::LinearFit;
use crate::error::{EssError, Result};

pub const MAX_ITERATIONS: usize = 50_000;
const TOLERANCE: f64 = 1e-7;

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

struct Problem<'a> {
    x: &'a [f64],
    y: &'a [f64],
    p: usize,
    penalty: f64,
}

impl Problem<'_> {
    fn m(&self) -> usize {
        self.y.len()
    }

    /// `w[0]` is the intercept.
    fn margin(&self, w: &[f64], i: usize) -> f64 {
        let row = &self.x[i * self.p..(i + 1) * self.p];
        w[0] + row.iter().zip(&w[1..]).map(|(a, b)| a * b).sum::<f64>()
    }

    fn smooth(&self, w: &[f64]) -> f64 {
        (0..self.m())
            .map(|i| {
                let z = self.margin(w, i);
                softplus(z) - self.y[i] * z
            })
            .sum::<f64>()
            / self.m() as f64
    }

    fn smooth_grad(&self, w: &[f64], g: &mut [f64]) -> f64 {
        g.fill(0.0);
        let mut f = 0.0;
        for i in 0..self.m() {
            let z = self.margin(w, i);
            f += softplus(z) - self.y[i] * z;
            let r = sigmoid(z) - self.y[i];
            g[0] += r;
            let row = &self.x[i * self.p..(i + 1) * self.p];
            for (gj, xj) in g[1..].iter_mut().zip(row) {
                *gj += r * xj;
            }
        }
        let m = self.m() as f64;
        g.iter_mut().for_each(|v| *v /= m);
        f / m
    }

    fn l1(&self, w: &[f64]) -> f64 {
        self.penalty * w[1..].iter().map(|b| b.abs()).sum::<f64>()
    }

    fn prox_step(&self, y: &[f64], g: &[f64], step: f64, out: &mut [f64]) {
        out[0] = y[0] - step * g[0];
        let t = step * self.penalty;
        for j in 1..y.len() {
            let z = y[j] - step * g[j];
            out[j] = if z > t {
                z - t
            } else if z < -t {
                z + t
            } else {
                0.0
            };
        }
    }
}

pub fn objective(x: &[f64], y01: &[f64], p: usize, c: f64, fit: &LinearFit) -> f64 {
    let prob = Problem {
        x,
        y: y01,
        p,
        penalty: 1.0 / (c * y01.len() as f64),
    };
    let mut w = vec![fit.intercept];
    w.extend_from_slice(&fit.coef);
    prob.smooth(&w) + prob.l1(&w)
}

/// Fits a binary model; `y01` holds 0/1 responses.
pub fn logit_l1(x: &[f64], y01: &[f64], p: usize, c: f64) -> Result<LinearFit> {
    if y01.is_empty() {
        return Err(EssError::invalid("logistic regression needs at least one row"));
    }
    if !(c > 0.0) {
        return Err(EssError::invalid(format!("inverse penalty C must be > 0, got {c}")));
    }
    let m = y01.len();
    let prob = Problem {
        x,
        y: y01,
        p,
        penalty: 1.0 / (c * m as f64),
    };
    let dim = p + 1;
    let mut w = vec![0.0; dim];
    let ybar = y01.iter().sum::<f64>() / m as f64;
    if ybar > 0.0 && ybar < 1.0 {
        w[0] = (ybar / (1.0 - ybar)).ln();
    }
    let mut v = w.clone();
    let mut w_next = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    let mut t = 1.0f64;
    // Lipschitz bound of the smooth part is at most ||[1 X]||_F^2 / (4m);
    // start an order of magnitude lower and let backtracking raise it.
    let fro = m as f64 + x.iter().map(|a| a * a).sum::<f64>();
    let mut lip = (fro / (4.0 * m as f64) / dim as f64).max(1e-8);
    let mut f_prev = prob.smooth(&w) + prob.l1(&w);
    let mut last_change = f64::INFINITY;

    for it in 1..=MAX_ITERATIONS {
        let fv = prob.smooth_grad(&v, &mut g);
        loop {
            prob.prox_step(&v, &g, 1.0 / lip, &mut w_next);
            let mut lin = 0.0;
            let mut sq = 0.0;
            for j in 0..dim {
                let d = w_next[j] - v[j];
                lin += g[j] * d;
                sq += d * d;
            }
            if prob.smooth(&w_next) <= fv + lin + 0.5 * lip * sq + 1e-15 * fv.abs() {
                break;
            }
            lip *= 2.0;
        }
        // gradient-mapping residual at the extrapolated point
        let resid = w_next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            * lip;
        last_change = resid;
        let f_next = prob.smooth(&w_next) + prob.l1(&w_next);
        if resid <= TOLERANCE {
            return Ok(LinearFit {
                intercept: w_next[0],
                coef: w_next[1..].to_vec(),
                iterations: it,
            });
        }
        if f_next > f_prev {
            // restart momentum from the last iterate
            t = 1.0;
            v.clone_from(&w);
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let mom = (t - 1.0) / t_next;
        for j in 0..dim {
            v[j] = w_next[j] + mom * (w_next[j] - w[j]);
        }
        w.clone_from(&w_next);
        t = t_next;
        f_prev = f_next;
    }
    Err(EssError::NonConvergence {
        solver: "L1 logistic proximal gradient",
        iterations: MAX_ITERATIONS,
        last_change,
    })
}
