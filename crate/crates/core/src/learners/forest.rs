//! Random forest: bootstrap-resampled CART trees with per-split feature
//! subsampling. Regression trees split on squared error, classification
//! trees on Gini impurity.

use rand::seq::index::sample;
use rand::Rng as _;
use rayon::prelude::*;

use crate::seeds::{derive_seed, rng, tag};

#[derive(Debug, Clone, Copy)]
pub enum ForestTarget<'a> {
    Regression(&'a [f64]),
    /// Class indices in `0..n_classes`.
    Classification { y: &'a [usize], n_classes: usize },
}

impl ForestTarget<'_> {
    fn len(&self) -> usize {
        match self {
            ForestTarget::Regression(y) => y.len(),
            ForestTarget::Classification { y, .. } => y.len(),
        }
    }

    fn width(&self) -> usize {
        match self {
            ForestTarget::Regression(_) => 1,
            ForestTarget::Classification { n_classes, .. } => *n_classes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features tried per split; `None` uses p/3 (regression) or sqrt(p).
    pub mtry: Option<usize>,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { offset: usize },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
    /// Leaf payloads: a mean, or class proportions.
    values: Vec<f64>,
}

impl Tree {
    fn leaf<'a>(&'a self, row: &[f64], width: usize) -> &'a [f64] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { offset } => return &self.values[*offset..*offset + width],
                Node::Split { feature, threshold, left, right } => {
                    at = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Forest {
    trees: Vec<Tree>,
    width: usize,
    classification: bool,
}

struct Builder<'a> {
    x: &'a [f64],
    p: usize,
    target: ForestTarget<'a>,
    params: ForestParams,
    mtry: usize,
}

impl Builder<'_> {
    fn value(&self, i: usize) -> f64 {
        match self.target {
            ForestTarget::Regression(y) => y[i],
            ForestTarget::Classification { .. } => unreachable!(),
        }
    }

    fn class(&self, i: usize) -> usize {
        match self.target {
            ForestTarget::Classification { y, .. } => y[i],
            ForestTarget::Regression(_) => unreachable!(),
        }
    }

    fn leaf_payload(&self, idx: &[usize], out: &mut Vec<f64>) {
        let n = idx.len() as f64;
        match self.target {
            ForestTarget::Regression(y) => out.push(idx.iter().map(|&i| y[i]).sum::<f64>() / n),
            ForestTarget::Classification { y, n_classes } => {
                let start = out.len();
                out.resize(start + n_classes, 0.0);
                for &i in idx {
                    out[start + y[i]] += 1.0;
                }
                out[start..].iter_mut().for_each(|v| *v /= n);
            }
        }
    }

    fn is_pure(&self, idx: &[usize]) -> bool {
        match self.target {
            ForestTarget::Regression(y) => {
                let first = y[idx[0]];
                idx.iter().all(|&i| y[i] == first)
            }
            ForestTarget::Classification { y, .. } => {
                let first = y[idx[0]];
                idx.iter().all(|&i| y[i] == first)
            }
        }
    }

    /// Best split over a random feature subset: (feature, threshold, left count).
    fn best_split(&self, idx: &mut [usize], r: &mut crate::seeds::Rng) -> Option<(usize, f64)> {
        let n = idx.len();
        let min_leaf = self.params.min_leaf.max(1);
        let features = sample(r, self.p, self.mtry);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order: Vec<usize> = idx.to_vec();
        let width = self.target.width();
        let mut left = vec![0.0; width];
        let mut total = vec![0.0; width];
        for i in idx.iter() {
            match self.target {
                ForestTarget::Regression(_) => total[0] += self.value(*i),
                ForestTarget::Classification { .. } => total[self.class(*i)] += 1.0,
            }
        }
        let score = |counts: &[f64], k: f64, classification: bool| -> f64 {
            if classification {
                counts.iter().map(|c| c * c).sum::<f64>() / k
            } else {
                counts[0] * counts[0] / k
            }
        };
        let classification = matches!(self.target, ForestTarget::Classification { .. });
        let parent = score(&total, n as f64, classification);
        for f in features.iter() {
            order.sort_by(|&a, &b| {
                self.x[a * self.p + f]
                    .total_cmp(&self.x[b * self.p + f])
                    .then(a.cmp(&b))
            });
            left.fill(0.0);
            for pos in 0..n - 1 {
                let i = order[pos];
                match self.target {
                    ForestTarget::Regression(_) => left[0] += self.value(i),
                    ForestTarget::Classification { .. } => left[self.class(i)] += 1.0,
                }
                let nl = pos + 1;
                let nr = n - nl;
                if nl < min_leaf || nr < min_leaf {
                    continue;
                }
                let xa = self.x[i * self.p + f];
                let xb = self.x[order[pos + 1] * self.p + f];
                if xa == xb {
                    continue;
                }
                let right_sq: f64 = total
                    .iter()
                    .zip(&left)
                    .map(|(t, l)| (t - l) * (t - l))
                    .sum();
                let s = score(&left, nl as f64, classification) + right_sq / nr as f64;
                if s > parent + 1e-12 * parent.abs().max(1e-300)
                    && best.is_none_or(|(b, _, _)| s > b)
                {
                    let mut thr = 0.5 * (xa + xb);
                    if thr >= xb {
                        thr = xa;
                    }
                    best = Some((s, f, thr));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn grow(&self, idx: &mut [usize], depth: usize, tree: &mut Tree, r: &mut crate::seeds::Rng) -> usize {
        let at = tree.nodes.len();
        tree.nodes.push(Node::Leaf { offset: 0 });
        let can_split = idx.len() >= 2 * self.params.min_leaf.max(1)
            && self.params.max_depth.is_none_or(|d| depth < d)
            && self.p > 0
            && !self.is_pure(idx);
        let split = if can_split { self.best_split(idx, r) } else { None };
        match split {
            None => {
                let offset = tree.values.len();
                self.leaf_payload(idx, &mut tree.values);
                tree.nodes[at] = Node::Leaf { offset };
            }
            Some((feature, threshold)) => {
                let mut lo = 0;
                for k in 0..idx.len() {
                    if self.x[idx[k] * self.p + feature] <= threshold {
                        idx.swap(lo, k);
                        lo += 1;
                    }
                }
                let (l, rr) = idx.split_at_mut(lo);
                let left = self.grow(l, depth + 1, tree, r);
                let right = self.grow(rr, depth + 1, tree, r);
                tree.nodes[at] = Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
            }
        }
        at
    }
}

impl Forest {
    /// Fits `params.trees` trees on the row-major `m x p` matrix `x`.
    pub fn fit(x: &[f64], p: usize, target: ForestTarget<'_>, params: ForestParams, seed: u64) -> Forest {
        let m = target.len();
        assert!(m > 0 && x.len() == m * p);
        let classification = matches!(target, ForestTarget::Classification { .. });
        let default_mtry = if classification {
            (p as f64).sqrt().floor() as usize
        } else {
            p / 3
        };
        let mtry = params.mtry.unwrap_or(default_mtry).clamp(1.min(p), p);
        let builder = Builder {
            x,
            p,
            target,
            params,
            mtry,
        };
        let trees = (0..params.trees.max(1))
            .into_par_iter()
            .map(|t| {
                let mut r = rng(derive_seed(seed, &[tag::TREE, t as u64]));
                let mut idx: Vec<usize> = (0..m).map(|_| r.random_range(0..m)).collect();
                let mut tree = Tree {
                    nodes: Vec::new(),
                    values: Vec::new(),
                };
                builder.grow(&mut idx, 0, &mut tree, &mut r);
                tree
            })
            .collect();
        Forest {
            trees,
            width: target.width(),
            classification,
        }
    }

    pub fn predict_real(&self, row: &[f64]) -> f64 {
        debug_assert!(!self.classification);
        self.trees.iter().map(|t| t.leaf(row, 1)[0]).sum::<f64>() / self.trees.len() as f64
    }

    /// Class index with the largest averaged proportion (lowest index on ties).
    pub fn predict_class(&self, row: &[f64]) -> usize {
        debug_assert!(self.classification);
        let mut acc = vec![0.0; self.width];
        for t in &self.trees {
            for (a, v) in acc.iter_mut().zip(t.leaf(row, self.width)) {
                *a += v;
            }
        }
        let mut best = 0;
        for (k, &v) in acc.iter().enumerate() {
            if v > acc[best] {
                best = k;
            }
        }
        best
    }

    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(trees: usize) -> ForestParams {
        ForestParams {
            trees,
            max_depth: None,
            min_leaf: 1,
            mtry: None,
        }
    }

    #[test]
    fn step_function_is_learned() {
        let x: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&v| if v < 20.0 { 0.0 } else { 10.0 }).collect();
        let f = Forest::fit(&x, 1, ForestTarget::Regression(&y), params(50), 1);
        assert!(f.predict_real(&[2.0]) < 1.0);
        assert!(f.predict_real(&[37.0]) > 9.0);
    }

    #[test]
    fn classification_majority_by_region() {
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let y: Vec<usize> = (0..30).map(|i| (i >= 15) as usize).collect();
        let f = Forest::fit(
            &x,
            1,
            ForestTarget::Classification { y: &y, n_classes: 2 },
            params(25),
            9,
        );
        assert_eq!(f.predict_class(&[1.0]), 0);
        assert_eq!(f.predict_class(&[28.0]), 1);
    }

    #[test]
    fn seeded_fits_are_identical() {
        let x: Vec<f64> = (0..60).map(|i| ((i * 37) % 11) as f64).collect();
        let y: Vec<f64> = (0..30).map(|i| (i % 7) as f64).collect();
        let a = Forest::fit(&x, 2, ForestTarget::Regression(&y), params(20), 5);
        let b = Forest::fit(&x, 2, ForestTarget::Regression(&y), params(20), 5);
        for i in 0..30 {
            let row = &x[2 * i..2 * i + 2];
            assert_eq!(a.predict_real(row).to_bits(), b.predict_real(row).to_bits());
        }
    }

    #[test]
    fn depth_zero_is_bootstrap_mean() {
        let x = [0.0, 1.0, 2.0];
        let y = [3.0, 3.0, 3.0];
        let f = Forest::fit(
            &x,
            1,
            ForestTarget::Regression(&y),
            ForestParams {
                max_depth: Some(0),
                ..params(3)
            },
            0,
        );
        assert_eq!(f.predict_real(&[5.0]), 3.0);
    }
}
