//! Block partitions, block-out cross-validation and fixed-rule risk.
//!
//! Rows are permuted once with a seed that does not depend on the training
//! size; each training size `N` then slices the same order into
//! `B = floor(n / N)` contiguous blocks and drops the remainder from both
//! training and testing. Block `b` trains one rule which is evaluated on
//! every kept row outside `S_b`.
//!
//! Blocks are trained in parallel, a bounded chunk at a time, and their
//! losses are folded into the accumulators strictly in block order, so every
//! sum is formed in the same order as a plain double loop over
//! `(block, position)`.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{EssError, Result};
use crate::learners::{tuning_subset, Hyperparameters, Learner};
use crate::loss::{LossKind, MetricScale, Outcome, RiskEstimate};
use crate::rule::fixed_rule_losses;
use crate::seeds::{derive_seed, rng, tag};
use crate::variance::sample_variance;

const CHUNK: usize = 32;

/// Seeded permutation of `0..n` shared by every training size.
pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng(derive_seed(seed, &[tag::PERMUTATION])));
    order
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockPartition {
    n: usize,
    train_size: usize,
    blocks: usize,
    order: Vec<usize>,
}

impl BlockPartition {
    /// Blocks over an explicit row order (a permutation of `0..n`).
    pub fn from_order(order: Vec<usize>, train_size: usize) -> Result<Self> {
        let n = order.len();
        if train_size == 0 {
            return Err(EssError::invalid("training size must be at least 1"));
        }
        if train_size > n / 2 {
            return Err(EssError::GridInfeasible { train_size, n });
        }
        Ok(BlockPartition {
            n,
            train_size,
            blocks: n / train_size,
            order,
        })
    }

    pub fn identity(n: usize, train_size: usize) -> Result<Self> {
        Self::from_order((0..n).collect(), train_size)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn train_size(&self) -> usize {
        self.train_size
    }

    pub fn block_count(&self) -> usize {
        self.blocks
    }

    pub fn discarded(&self) -> usize {
        self.n - self.blocks * self.train_size
    }

    /// Row ids of block `b` (0-based).
    pub fn block(&self, b: usize) -> &[usize] {
        &self.order[b * self.train_size..(b + 1) * self.train_size]
    }

    /// Row ids of all kept positions, in block order.
    pub fn kept(&self) -> &[usize] {
        &self.order[..self.blocks * self.train_size]
    }

    pub fn discarded_rows(&self) -> &[usize] {
        &self.order[self.blocks * self.train_size..]
    }
}

/// Seeded partition of `n` rows into blocks of size `train_size`.
pub fn partition_blocks(n: usize, train_size: usize, seed: u64) -> Result<BlockPartition> {
    if train_size == 0 {
        return Err(EssError::invalid("training size must be at least 1"));
    }
    if train_size > n / 2 {
        return Err(EssError::GridInfeasible { train_size, n });
    }
    BlockPartition::from_order(permutation(n, seed), train_size)
}

/// A pointwise loss of a prediction for a given row.
pub trait PointLoss: Sync {
    fn loss(&self, data: &Dataset, row: usize, pred: Outcome) -> f64;

    fn form(&self) -> LossForm;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LossForm {
    Plain,
    /// Learner loss minus fixed-rule loss.
    Difference,
}

pub struct TargetLoss(pub LossKind);

impl PointLoss for TargetLoss {
    fn loss(&self, data: &Dataset, row: usize, pred: Outcome) -> f64 {
        self.0.eval(data.outcome().get(row), pred)
    }

    fn form(&self) -> LossForm {
        LossForm::Plain
    }
}

/// `delta(f, Z) = l(f(X), Y) - l(f_rule(X), Y)`.
pub struct DifferenceLoss {
    kind: LossKind,
    rule_losses: Vec<f64>,
}

impl DifferenceLoss {
    pub fn rule_losses(&self) -> &[f64] {
        &self.rule_losses
    }
}

impl PointLoss for DifferenceLoss {
    fn loss(&self, data: &Dataset, row: usize, pred: Outcome) -> f64 {
        self.kind.eval(data.outcome().get(row), pred) - self.rule_losses[row]
    }

    fn form(&self) -> LossForm {
        LossForm::Difference
    }
}

pub fn difference_loss(loss: LossKind, data: &Dataset) -> Result<DifferenceLoss> {
    Ok(DifferenceLoss {
        kind: loss,
        rule_losses: fixed_rule_losses(data, loss)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockCvResult {
    pub train_size: usize,
    pub blocks: usize,
    pub n_effective: usize,
    pub e_cv: f64,
    pub block_risks: Vec<f64>,
    /// Per kept position (block order), mean loss over the `B - 1` other blocks.
    pub mu_hat: Vec<f64>,
    pub m_hat: Vec<f64>,
    /// Original row id of each kept position.
    pub rows: Vec<usize>,
    /// Optional `B x (B N)` row-major loss matrix; own-block cells are NaN.
    #[serde(skip)]
    pub losses: Option<Vec<f64>>,
    pub loss_form: LossForm,
    /// One entry when tuned per size, one per block otherwise.
    pub hyperparameters: Vec<Hyperparameters>,
}

impl BlockCvResult {
    /// Loss of block `b`'s rule at kept position `pos`, if retained.
    pub fn loss_at(&self, b: usize, pos: usize) -> Option<f64> {
        let n_eff = self.n_effective;
        self.losses.as_ref().map(|l| l[b * n_eff + pos])
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CvOptions {
    pub seed: u64,
    pub retain_losses: bool,
}

struct Accumulator {
    b: usize,
    n_train: usize,
    block_sums: Vec<f64>,
    mu_sums: Vec<f64>,
    losses: Option<Vec<f64>>,
}

impl Accumulator {
    fn new(b: usize, n_train: usize, retain: bool) -> Self {
        let n_eff = b * n_train;
        Accumulator {
            b,
            n_train,
            block_sums: vec![0.0; b],
            mu_sums: vec![0.0; n_eff],
            losses: retain.then(|| vec![f64::NAN; b * n_eff]),
        }
    }

    fn fold(&mut self, block: usize, row: &[f64]) {
        let own = block * self.n_train..(block + 1) * self.n_train;
        let mut s = 0.0;
        for (pos, &l) in row.iter().enumerate() {
            if own.contains(&pos) {
                continue;
            }
            s += l;
            self.mu_sums[pos] += l;
            if let Some(m) = self.losses.as_mut() {
                m[block * row.len() + pos] = l;
            }
        }
        self.block_sums[block] = s;
    }

    fn finish(self, rows: Vec<usize>, form: LossForm, hyperparameters: Vec<Hyperparameters>) -> BlockCvResult {
        let b = self.b;
        let n_train = self.n_train;
        let tests = ((b - 1) * n_train) as f64;
        let block_risks: Vec<f64> = self.block_sums.iter().map(|s| s / tests).collect();
        let e_cv = block_risks.iter().sum::<f64>() / b as f64;
        let mu_hat: Vec<f64> = self.mu_sums.iter().map(|s| s / (b - 1) as f64).collect();
        let m_hat = mu_hat
            .chunks(n_train)
            .map(|c| c.iter().sum::<f64>() / n_train as f64)
            .collect();
        BlockCvResult {
            train_size: n_train,
            blocks: b,
            n_effective: b * n_train,
            e_cv,
            block_risks,
            mu_hat,
            m_hat,
            rows,
            losses: self.losses,
            loss_form: form,
            hyperparameters,
        }
    }
}

/// Block-out CV evaluating several pointwise losses on the same trained
/// rules. Returns one result per loss, in order.
pub fn block_out_cv_with(
    data: &Dataset,
    learner: &dyn Learner,
    partition: &BlockPartition,
    losses: &[&dyn PointLoss],
    options: CvOptions,
) -> Result<Vec<BlockCvResult>> {
    if partition.n() != data.n() {
        return Err(EssError::invalid(format!(
            "partition covers {} rows, dataset has {}",
            partition.n(),
            data.n()
        )));
    }
    learner.check_outcome(data.outcome_type())?;
    let b = partition.block_count();
    let n_train = partition.train_size();
    if b < 2 {
        return Err(EssError::InsufficientBlocks { blocks: b });
    }
    let seed = options.seed;
    let shared_hp = if learner.tune_per_block() {
        None
    } else {
        let rows = tuning_subset(data.n(), n_train, seed);
        let hp = learner
            .tune(data, &rows, derive_seed(seed, &[tag::TUNING, n_train as u64, 1]))
            .map_err(|e| EssError::BlockTraining {
                block: 0,
                train_size: n_train,
                source: Box::new(e),
            })?;
        Some(hp)
    };
    let kept = partition.kept();
    let mut accs: Vec<Accumulator> = losses
        .iter()
        .map(|_| Accumulator::new(b, n_train, options.retain_losses))
        .collect();
    let mut block_hps = Vec::new();

    for start in (0..b).step_by(CHUNK) {
        let end = (start + CHUNK).min(b);
        let outputs: Vec<Result<(Hyperparameters, Vec<Vec<f64>>)>> = (start..end)
            .into_par_iter()
            .map(|block| {
                let train_rows = partition.block(block);
                let hp = match &shared_hp {
                    Some(hp) => hp.clone(),
                    None => learner.tune(
                        data,
                        train_rows,
                        derive_seed(seed, &[tag::TUNING, n_train as u64, block as u64]),
                    )?,
                };
                let rule_seed = derive_seed(seed, &[tag::BLOCK, n_train as u64, block as u64]);
                let rule = learner.train(data, train_rows, &hp, rule_seed, Some(block))?;
                let mut preds = vec![Outcome::Real(0.0); kept.len()];
                rule.predict_rows(data, kept, &mut preds);
                let rows = losses
                    .iter()
                    .map(|l| {
                        kept.iter()
                            .zip(&preds)
                            .map(|(&r, &p)| l.loss(data, r, p))
                            .collect()
                    })
                    .collect();
                Ok((hp, rows))
            })
            .collect();
        for (offset, out) in outputs.into_iter().enumerate() {
            let block = start + offset;
            let (hp, rows) = out.map_err(|e| EssError::BlockTraining {
                block,
                train_size: n_train,
                source: Box::new(e),
            })?;
            for (acc, row) in accs.iter_mut().zip(&rows) {
                acc.fold(block, row);
            }
            if shared_hp.is_none() {
                block_hps.push(hp);
            }
        }
    }
    let hps = match shared_hp {
        Some(hp) => vec![hp],
        None => block_hps,
    };
    Ok(accs
        .into_iter()
        .zip(losses)
        .map(|(acc, l)| acc.finish(kept.to_vec(), l.form(), hps.clone()))
        .collect())
}

/// Block-out CV risk of `learner` at training size `train_size` under the
/// seeded partition.
pub fn block_out_cv(
    data: &Dataset,
    learner: &dyn Learner,
    train_size: usize,
    loss: LossKind,
    seed: u64,
) -> Result<BlockCvResult> {
    loss.check_outcome_type(data.outcome_type())?;
    let partition = partition_blocks(data.n(), train_size, seed)?;
    let target = TargetLoss(loss);
    let mut out = block_out_cv_with(
        data,
        learner,
        &partition,
        &[&target],
        CvOptions {
            seed,
            retain_losses: false,
        },
    )?;
    Ok(out.remove(0))
}

/// Empirical risk of the dataset's fixed-rule predictions over all rows.
pub fn fixed_rule_risk(data: &Dataset, loss: LossKind) -> Result<RiskEstimate> {
    let l = fixed_rule_losses(data, loss)?;
    Ok(risk_of_losses(&l, loss))
}

/// Mean of pointwise losses with `sd / sqrt(n)` as its standard error.
pub fn risk_of_losses(losses: &[f64], loss: LossKind) -> RiskEstimate {
    let n = losses.len();
    let value = losses.iter().sum::<f64>() / n as f64;
    let se = if n > 1 {
        (sample_variance(losses).max(0.0) / n as f64).sqrt()
    } else {
        0.0
    };
    RiskEstimate {
        value,
        se,
        n_eval: n,
        loss,
        scale: MetricScale::Loss,
    }
}
