//! k-nearest neighbours on preprocessed (standardized) features.

#[derive(Debug, Clone)]
pub struct NearestNeighbors {
    x: Vec<f64>,
    p: usize,
    k: usize,
}

impl NearestNeighbors {
    pub fn new(x: Vec<f64>, p: usize, k: usize) -> Self {
        let m = if p == 0 { 0 } else { x.len() / p };
        assert!(p == 0 || x.len() == m * p);
        NearestNeighbors { x, p, k }
    }

    /// Indices of the `min(k, m)` nearest training rows, nearest first;
    /// distance ties go to the lower index. `m` is needed when `p == 0`.
    pub fn neighbors(&self, row: &[f64], m: usize) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = (0..m)
            .map(|i| {
                let t = &self.x[i * self.p..(i + 1) * self.p];
                (t.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i)
            })
            .collect();
        let k = self.k.min(m).max(1);
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < d.len() {
            d.select_nth_unstable_by(k - 1, cmp);
            d.truncate(k);
        }
        d.sort_by(cmp);
        d.into_iter().map(|(_, i)| i).collect()
    }
}

/// Average of neighbour targets.
pub fn mean_of(idx: &[usize], y: &[f64]) -> f64 {
    idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64
}

/// Most frequent neighbour class; ties go to the class whose nearest member
/// ranks first.
pub fn vote(idx: &[usize], y: &[usize], n_classes: usize) -> usize {
    let mut counts = vec![0usize; n_classes];
    let mut first = vec![usize::MAX; n_classes];
    for (rank, &i) in idx.iter().enumerate() {
        counts[y[i]] += 1;
        first[y[i]] = first[y[i]].min(rank);
    }
    (0..n_classes)
        .filter(|&c| counts[c] > 0)
        .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(first[b].cmp(&first[a])))
        .expect("at least one neighbour")
}
