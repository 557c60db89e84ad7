//! Fold assignment for internal tuning CV.

use rand::seq::SliceRandom;

use crate::seeds::Rng;

/// Fold id for each of `m` positions; fold sizes differ by at most one.
pub fn kfold(m: usize, k: usize, rng: &mut Rng) -> Vec<usize> {
    assert!(k >= 1 && k <= m.max(1));
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(rng);
    let mut fold = vec![0; m];
    for (i, &pos) in order.iter().enumerate() {
        fold[pos] = i % k;
    }
    fold
}

/// Stratified fold ids: each class is shuffled and dealt round-robin, with
/// the dealing offset carried from one class to the next.
pub fn stratified(classes: &[u32], k: usize, rng: &mut Rng) -> Vec<usize> {
    assert!(k >= 1);
    let mut distinct: Vec<u32> = classes.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let mut fold = vec![0; classes.len()];
    let mut next = 0usize;
    for c in distinct {
        let mut members: Vec<usize> = (0..classes.len()).filter(|&i| classes[i] == c).collect();
        members.shuffle(rng);
        for pos in members {
            fold[pos] = next % k;
            next += 1;
        }
    }
    fold
}

/// Number of stratified folds for classification tuning: at most `cap` and
/// never more than the minority class count.
pub fn classification_fold_count(classes: &[u32], cap: usize) -> usize {
    let mut counts = std::collections::BTreeMap::<u32, usize>::new();
    for &c in classes {
        *counts.entry(c).or_default() += 1;
    }
    let minority = counts.values().copied().min().unwrap_or(0);
    cap.min(minority)
}

/// Splits positions `0..fold.len()` into (train, test) for fold `f`.
pub fn split(fold: &[usize], f: usize) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, &g) in fold.iter().enumerate() {
        if g == f {
            test.push(i);
        } else {
            train.push(i);
        }
    }
    (train, test)
}
