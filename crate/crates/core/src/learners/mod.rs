//! Comparator algorithms: a map from a training sample to a prediction rule.
//!
//! Hyperparameters are tuned once per training size on a seeded tuning
//! subset of that size and then held fixed across blocks (optionally per
//! block instead). Baseline families ignore preprocessing.

pub mod folds;
pub mod forest;
pub mod knn;
pub mod lasso;
pub mod logit;
pub mod preprocess;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, OutcomeType, Target};
use crate::error::{EssError, Result};
use crate::loss::Outcome;
use crate::rule::{ConstantRule, PredictionRule, Provenance};
use crate::seeds::{derive_seed, rng, tag};

pub use preprocess::{PreprocessOptions, Preprocessor};

use forest::{Forest, ForestParams, ForestTarget};
use knn::NearestNeighbors;
use lasso::LinearFit;

/// Anything that can be trained on a set of rows of a dataset.
pub trait Learner: Sync {
    fn name(&self) -> String;

    fn check_outcome(&self, ty: OutcomeType) -> Result<()>;

    /// Tune on each training block instead of once per training size.
    fn tune_per_block(&self) -> bool {
        false
    }

    /// Selects hyperparameters using only `rows`.
    fn tune(&self, data: &Dataset, rows: &[usize], seed: u64) -> Result<Hyperparameters>;

    /// Fits a rule using only `rows`.
    fn train(
        &self,
        data: &Dataset,
        rows: &[usize],
        hp: &Hyperparameters,
        seed: u64,
        block: Option<usize>,
    ) -> Result<Box<dyn PredictionRule>>;
}

/// Seeded size-`n_train` subset of `0..n` used for tuning at that size.
pub fn tuning_subset(n: usize, n_train: usize, seed: u64) -> Vec<usize> {
    let mut r = rng(derive_seed(seed, &[tag::TUNING, n_train as u64]));
    let mut rows = sample(&mut r, n, n_train.min(n)).into_vec();
    rows.sort_unstable();
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    BaselineMean,
    BaselineMajority,
    Lasso,
    LogitL1,
    RandomForest,
    /// Not used by the original application; a cheap nonparametric extra.
    Knn,
}

impl Family {
    pub fn supports(self, ty: OutcomeType) -> bool {
        match self {
            Family::BaselineMean | Family::Lasso => ty == OutcomeType::Numeric,
            Family::BaselineMajority | Family::LogitL1 => ty == OutcomeType::Label,
            Family::RandomForest | Family::Knn => true,
        }
    }

    /// Short name used in reports.
    pub fn display_name(self) -> &'static str {
        match self {
            Family::BaselineMean => "Mean",
            Family::BaselineMajority => "Majority",
            Family::Lasso => "Lasso",
            Family::LogitL1 => "Logit L1",
            Family::RandomForest => "RF",
            Family::Knn => "kNN",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Family::BaselineMean => "baseline_mean",
            Family::BaselineMajority => "baseline_majority",
            Family::Lasso => "lasso",
            Family::LogitL1 => "logit_l1",
            Family::RandomForest => "random_forest",
            Family::Knn => "knn",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.key())
    }
}

impl std::str::FromStr for Family {
    type Err = EssError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "baseline_mean" | "mean" => Family::BaselineMean,
            "baseline_majority" | "majority" => Family::BaselineMajority,
            "lasso" => Family::Lasso,
            "logit_l1" | "logit" => Family::LogitL1,
            "random_forest" | "rf" | "forest" => Family::RandomForest,
            "knn" => Family::Knn,
            other => return Err(EssError::config(format!("unknown learner family '{other}'"))),
        })
    }
}

mod depth_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Bounded(usize),
        Word(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<usize>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(d) => Repr::Bounded(*d).serialize(s),
            None => Repr::Word("unbounded".into()).serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<usize>, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Bounded(v) => Ok(Some(v)),
            Repr::Word(w) if w == "unbounded" => Ok(None),
            Repr::Word(w) => Err(serde::de::Error::custom(format!("bad max_depth '{w}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Hyperparameters {
    None,
    Lasso {
        lambda: f64,
    },
    LogitL1 {
        c: f64,
    },
    RandomForest {
        #[serde(with = "depth_serde")]
        max_depth: Option<usize>,
        min_leaf: usize,
    },
    Knn {
        k: usize,
    },
    /// The tuning subset held a single class; blocks with one class predict
    /// it, blocks with several fall back to family defaults.
    MajorityFallback {
        class: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningPolicy {
    /// Tune once per training size on a seeded subset (`true`) or per block.
    pub per_n_subset: bool,
    pub lasso_folds: usize,
    pub lasso_path_len: usize,
    pub lasso_path_decades: f64,
    pub forest_folds: usize,
    pub knn_folds: usize,
    /// Upper bound on stratified folds for classification.
    pub classification_fold_cap: usize,
    pub logit_c_grid: Vec<f64>,
    pub forest_trees: usize,
    #[serde(with = "depth_grid_serde")]
    pub forest_max_depth_grid: Vec<Option<usize>>,
    pub forest_min_leaf_grid: Vec<usize>,
    pub knn_k_grid: Vec<usize>,
}

mod depth_grid_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Option<usize>], s: S) -> Result<S::Ok, S::Error> {
        let words: Vec<serde_json::Value> = v
            .iter()
            .map(|d| match d {
                Some(d) => serde_json::Value::from(*d),
                None => serde_json::Value::from("unbounded"),
            })
            .collect();
        words.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Option<usize>>, D::Error> {
        let raw = Vec::<serde_json::Value>::deserialize(d)?;
        raw.into_iter()
            .map(|v| match v {
                serde_json::Value::Number(n) => n
                    .as_u64()
                    .map(|d| Some(d as usize))
                    .ok_or_else(|| serde::de::Error::custom("bad max_depth")),
                serde_json::Value::String(s) if s == "unbounded" => Ok(None),
                _ => Err(serde::de::Error::custom("bad max_depth")),
            })
            .collect()
    }
}

impl Default for TuningPolicy {
    fn default() -> Self {
        TuningPolicy {
            per_n_subset: true,
            lasso_folds: 5,
            lasso_path_len: 20,
            lasso_path_decades: 3.0,
            forest_folds: 3,
            knn_folds: 5,
            classification_fold_cap: 3,
            logit_c_grid: vec![0.01, 0.1, 1.0, 10.0],
            forest_trees: 300,
            forest_max_depth_grid: vec![None, Some(10), Some(20)],
            forest_min_leaf_grid: vec![1, 5],
            knn_k_grid: vec![1, 3, 5, 9],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub family: Family,
    pub preprocess: PreprocessOptions,
    pub tuning: TuningPolicy,
    /// Regression only: train on `log(1 + y)` and predict `exp(f) - 1`.
    pub log_outcome: bool,
}

impl LearnerSpec {
    pub fn new(family: Family) -> Self {
        LearnerSpec {
            family,
            preprocess: PreprocessOptions::default(),
            tuning: TuningPolicy::default(),
            log_outcome: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.preprocess.validate()?;
        let t = &self.tuning;
        if t.lasso_folds < 2 || t.forest_folds < 2 || t.knn_folds < 2 || t.classification_fold_cap < 2 {
            return Err(EssError::config("tuning fold counts must be at least 2"));
        }
        if t.lasso_path_len == 0 || !(t.lasso_path_decades >= 0.0) {
            return Err(EssError::config("lasso path needs at least one penalty and decades >= 0"));
        }
        if t.logit_c_grid.is_empty() || t.logit_c_grid.iter().any(|c| !(*c > 0.0)) {
            return Err(EssError::config("logit C grid must be non-empty and positive"));
        }
        if t.forest_trees == 0
            || t.forest_max_depth_grid.is_empty()
            || t.forest_min_leaf_grid.is_empty()
            || t.forest_min_leaf_grid.contains(&0)
        {
            return Err(EssError::config("forest grid must be non-empty with trees, min_leaf >= 1"));
        }
        if t.knn_k_grid.is_empty() || t.knn_k_grid.contains(&0) {
            return Err(EssError::config("knn k grid must be non-empty with k >= 1"));
        }
        Ok(())
    }

    /// Tunes at training size `n_train` on the seeded tuning subset.
    pub fn tune_for_size(&self, data: &Dataset, n_train: usize, seed: u64) -> Result<Hyperparameters> {
        let rows = tuning_subset(data.n(), n_train, seed);
        self.tune(data, &rows, derive_seed(seed, &[tag::TUNING, n_train as u64, 1]))
    }

    fn default_hyperparameters(&self) -> Hyperparameters {
        match self.family {
            Family::BaselineMean | Family::BaselineMajority => Hyperparameters::None,
            Family::Lasso => Hyperparameters::Lasso { lambda: 0.0 },
            Family::LogitL1 => Hyperparameters::LogitL1 { c: 1.0 },
            Family::RandomForest => Hyperparameters::RandomForest {
                max_depth: None,
                min_leaf: 1,
            },
            Family::Knn => Hyperparameters::Knn { k: 5 },
        }
    }

    fn candidates(&self) -> Vec<Hyperparameters> {
        let t = &self.tuning;
        match self.family {
            Family::LogitL1 => t
                .logit_c_grid
                .iter()
                .map(|&c| Hyperparameters::LogitL1 { c })
                .collect(),
            Family::RandomForest => t
                .forest_max_depth_grid
                .iter()
                .flat_map(|&d| {
                    t.forest_min_leaf_grid.iter().map(move |&l| Hyperparameters::RandomForest {
                        max_depth: d,
                        min_leaf: l,
                    })
                })
                .collect(),
            Family::Knn => t.knn_k_grid.iter().map(|&k| Hyperparameters::Knn { k }).collect(),
            _ => vec![self.default_hyperparameters()],
        }
    }

    fn fold_target(&self) -> usize {
        match self.family {
            Family::Lasso => self.tuning.lasso_folds,
            Family::RandomForest => self.tuning.forest_folds,
            Family::Knn => self.tuning.knn_folds,
            _ => self.tuning.forest_folds,
        }
    }

    fn provenance(&self, hp: &Hyperparameters, seed: u64, block: Option<usize>) -> Provenance {
        Provenance::Trained {
            learner: self.family.key().to_string(),
            block,
            hyperparameters: hp.clone(),
            seed,
        }
    }

    /// Training outcomes after winsorization and the optional log transform.
    fn regression_targets(&self, pre: &Preprocessor, y: &[f64], rows: &[usize]) -> Result<Vec<f64>> {
        rows.iter()
            .map(|&r| {
                let v = pre.clip_outcome(y[r]);
                if self.log_outcome {
                    if v <= -1.0 {
                        return Err(EssError::invalid(format!(
                            "log-outcome training needs y > -1, row {r} has {v}"
                        )));
                    }
                    Ok(v.ln_1p())
                } else {
                    Ok(v)
                }
            })
            .collect()
    }

    fn tune_lasso(&self, data: &Dataset, y: &[f64], rows: &[usize], seed: u64) -> Result<Hyperparameters> {
        let pre = Preprocessor::fit(data, rows, &self.preprocess)?;
        let x = pre.matrix(data, rows);
        let yt = self.regression_targets(&pre, y, rows)?;
        let lmax = lasso::lambda_max(&x, &yt, pre.width());
        let m = rows.len();
        if m < 2 || lmax == 0.0 {
            return Ok(Hyperparameters::Lasso { lambda: lmax });
        }
        let path = lasso::lambda_path(lmax, self.tuning.lasso_path_len, self.tuning.lasso_path_decades);
        let k = self.tuning.lasso_folds.min(m);
        let fold = folds::kfold(m, k, &mut rng(derive_seed(seed, &[tag::FOLDS])));
        let mut sse = vec![0.0; path.len()];
        for f in 0..k {
            let (tr, te) = folds::split(&fold, f);
            let tr_rows: Vec<usize> = tr.iter().map(|&i| rows[i]).collect();
            let te_rows: Vec<usize> = te.iter().map(|&i| rows[i]).collect();
            let fp = Preprocessor::fit(data, &tr_rows, &self.preprocess)?;
            let xtr = fp.matrix(data, &tr_rows);
            let ytr = self.regression_targets(&fp, y, &tr_rows)?;
            let xte = fp.matrix(data, &te_rows);
            let w = fp.width();
            let mut warm: Option<Vec<f64>> = None;
            for (s, &lambda) in sse.iter_mut().zip(&path) {
                let fit = lasso::lasso_cd(&xtr, &ytr, w, lambda, warm.as_deref())?;
                for (j, &r) in te_rows.iter().enumerate() {
                    let raw = fit.predict(&xte[j * w..(j + 1) * w]);
                    let pred = if self.log_outcome { raw.exp_m1() } else { raw };
                    *s += (pred - y[r]).powi(2);
                }
                warm = Some(fit.coef);
            }
        }
        let mut best = 0;
        for (i, &s) in sse.iter().enumerate() {
            if s < sse[best] {
                best = i;
            }
        }
        Ok(Hyperparameters::Lasso { lambda: path[best] })
    }

    fn tune_grid(&self, data: &Dataset, rows: &[usize], fold: &[usize], k: usize, seed: u64) -> Result<Hyperparameters> {
        let candidates = self.candidates();
        let mut scores = Vec::with_capacity(candidates.len());
        for (ci, hp) in candidates.iter().enumerate() {
            let mut total = 0.0;
            for f in 0..k {
                let (tr, te) = folds::split(fold, f);
                let tr_rows: Vec<usize> = tr.iter().map(|&i| rows[i]).collect();
                let fit_seed = derive_seed(seed, &[tag::FOLDS, ci as u64, f as u64]);
                let rule = match self.train(data, &tr_rows, hp, fit_seed, None) {
                    Ok(rule) => rule,
                    Err(EssError::NonConvergence { .. }) => {
                        total = f64::INFINITY;
                        break;
                    }
                    Err(e) => return Err(e),
                };
                for &i in &te {
                    let r = rows[i];
                    total += match (data.outcome().get(r), rule.predict_row(data, r)) {
                        (Outcome::Real(y), Outcome::Real(p)) => (p - y) * (p - y),
                        (Outcome::Class(y), Outcome::Class(p)) => (y != p) as u8 as f64,
                        _ => unreachable!("learner predicts the outcome type"),
                    };
                }
            }
            scores.push(total);
        }
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate() {
            if s < scores[best] {
                best = i;
            }
        }
        if !scores[best].is_finite() {
            return Err(EssError::Numeric(format!(
                "every {} tuning candidate failed to converge",
                self.family
            )));
        }
        Ok(candidates[best].clone())
    }

    fn train_regression(
        &self,
        data: &Dataset,
        y: &[f64],
        rows: &[usize],
        hp: &Hyperparameters,
        seed: u64,
        provenance: Provenance,
    ) -> Result<Box<dyn PredictionRule>> {
        let pre = Preprocessor::fit(data, rows, &self.preprocess)?;
        let x = pre.matrix(data, rows);
        let yt = self.regression_targets(&pre, y, rows)?;
        let w = pre.width();
        let log = self.log_outcome;
        match (self.family, hp) {
            (Family::Lasso, Hyperparameters::Lasso { lambda }) => {
                let fit = lasso::lasso_cd(&x, &yt, w, *lambda, None)?;
                Ok(FeatureRule::boxed(pre, LinearModel { fit, log }, provenance))
            }
            (Family::RandomForest, Hyperparameters::RandomForest { max_depth, min_leaf }) => {
                let params = ForestParams {
                    trees: self.tuning.forest_trees,
                    max_depth: *max_depth,
                    min_leaf: *min_leaf,
                    mtry: None,
                };
                let forest = Forest::fit(&x, w, ForestTarget::Regression(&yt), params, seed);
                Ok(FeatureRule::boxed(pre, ForestModel { forest, classes: None, log }, provenance))
            }
            (Family::Knn, Hyperparameters::Knn { k }) => {
                let nn = NearestNeighbors::new(x, w, *k);
                Ok(FeatureRule::boxed(
                    pre,
                    KnnModel {
                        nn,
                        m: rows.len(),
                        target: KnnTarget::Real(yt),
                        log,
                    },
                    provenance,
                ))
            }
            (family, hp) => Err(EssError::config(format!(
                "hyperparameters {hp:?} do not fit learner family {family}"
            ))),
        }
    }

    fn train_classification(
        &self,
        data: &Dataset,
        y: &[u32],
        rows: &[usize],
        hp: &Hyperparameters,
        seed: u64,
        provenance: Provenance,
    ) -> Result<Box<dyn PredictionRule>> {
        let mut classes: Vec<u32> = rows.iter().map(|&r| y[r]).collect();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() == 1 {
            return Ok(Box::new(ConstantRule::new(Outcome::Class(classes[0]), provenance)));
        }
        let hp = match hp {
            Hyperparameters::MajorityFallback { .. } => self.default_hyperparameters(),
            other => other.clone(),
        };
        let local: Vec<usize> = rows
            .iter()
            .map(|&r| classes.binary_search(&y[r]).expect("class present"))
            .collect();
        let pre = Preprocessor::fit(data, rows, &self.preprocess)?;
        let x = pre.matrix(data, rows);
        let w = pre.width();
        match (self.family, &hp) {
            (Family::LogitL1, Hyperparameters::LogitL1 { c }) => {
                let fits = if classes.len() == 2 {
                    let y01: Vec<f64> = local.iter().map(|&k| k as f64).collect();
                    vec![logit::logit_l1(&x, &y01, w, *c)?]
                } else {
                    (0..classes.len())
                        .map(|k| {
                            let y01: Vec<f64> = local.iter().map(|&v| (v == k) as u8 as f64).collect();
                            logit::logit_l1(&x, &y01, w, *c)
                        })
                        .collect::<Result<Vec<_>>>()?
                };
                Ok(FeatureRule::boxed(pre, LogitModel { classes, fits }, provenance))
            }
            (Family::RandomForest, Hyperparameters::RandomForest { max_depth, min_leaf }) => {
                let params = ForestParams {
                    trees: self.tuning.forest_trees,
                    max_depth: *max_depth,
                    min_leaf: *min_leaf,
                    mtry: None,
                };
                let forest = Forest::fit(
                    &x,
                    w,
                    ForestTarget::Classification {
                        y: &local,
                        n_classes: classes.len(),
                    },
                    params,
                    seed,
                );
                Ok(FeatureRule::boxed(
                    pre,
                    ForestModel {
                        forest,
                        classes: Some(classes),
                        log: false,
                    },
                    provenance,
                ))
            }
            (Family::Knn, Hyperparameters::Knn { k }) => {
                let nn = NearestNeighbors::new(x, w, *k);
                Ok(FeatureRule::boxed(
                    pre,
                    KnnModel {
                        nn,
                        m: rows.len(),
                        target: KnnTarget::Class(local, classes),
                        log: false,
                    },
                    provenance,
                ))
            }
            (family, hp) => Err(EssError::config(format!(
                "hyperparameters {hp:?} do not fit learner family {family}"
            ))),
        }
    }
}

impl Learner for LearnerSpec {
    fn name(&self) -> String {
        self.family.key().to_string()
    }

    fn check_outcome(&self, ty: OutcomeType) -> Result<()> {
        if self.family.supports(ty) {
            Ok(())
        } else {
            Err(EssError::config(format!(
                "learner family {} does not support {ty:?} outcomes",
                self.family
            )))
        }
    }

    fn tune_per_block(&self) -> bool {
        !self.tuning.per_n_subset
    }

    fn tune(&self, data: &Dataset, rows: &[usize], seed: u64) -> Result<Hyperparameters> {
        self.check_outcome(data.outcome_type())?;
        if rows.is_empty() {
            return Err(EssError::invalid("tuning subset is empty"));
        }
        match self.family {
            Family::BaselineMean | Family::BaselineMajority => return Ok(Hyperparameters::None),
            Family::Lasso => {
                let y = data.outcome().as_real().expect("checked");
                return self.tune_lasso(data, y, rows, seed);
            }
            _ => {}
        }
        let m = rows.len();
        let mut fold_rng = rng(derive_seed(seed, &[tag::FOLDS]));
        match data.outcome() {
            Target::Real(_) => {
                let k = self.fold_target().min(m);
                if k < 2 {
                    return Ok(self.default_hyperparameters());
                }
                let fold = folds::kfold(m, k, &mut fold_rng);
                self.tune_grid(data, rows, &fold, k, seed)
            }
            Target::Class(y) => {
                let classes: Vec<u32> = rows.iter().map(|&r| y[r]).collect();
                let first = classes[0];
                if classes.iter().all(|&c| c == first) {
                    return Ok(Hyperparameters::MajorityFallback { class: first });
                }
                let cap = self.tuning.classification_fold_cap.min(self.fold_target());
                let k = folds::classification_fold_count(&classes, cap);
                if k < 2 {
                    return Ok(self.default_hyperparameters());
                }
                let fold = folds::stratified(&classes, k, &mut fold_rng);
                self.tune_grid(data, rows, &fold, k, seed)
            }
        }
    }

    fn train(
        &self,
        data: &Dataset,
        rows: &[usize],
        hp: &Hyperparameters,
        seed: u64,
        block: Option<usize>,
    ) -> Result<Box<dyn PredictionRule>> {
        self.check_outcome(data.outcome_type())?;
        if rows.is_empty() {
            return Err(EssError::invalid("training block is empty"));
        }
        let provenance = self.provenance(hp, seed, block);
        match (self.family, data.outcome()) {
            (Family::BaselineMean, Target::Real(y)) => {
                let mean = rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len() as f64;
                Ok(Box::new(ConstantRule::new(Outcome::Real(mean), provenance)))
            }
            (Family::BaselineMajority, Target::Class(y)) => {
                Ok(Box::new(ConstantRule::new(Outcome::Class(majority(y, rows)), provenance)))
            }
            (_, Target::Real(y)) => self.train_regression(data, y, rows, hp, seed, provenance),
            (_, Target::Class(y)) => self.train_classification(data, y, rows, hp, seed, provenance),
        }
    }
}

/// Most frequent code among `rows`; ties go to the smallest code.
pub fn majority(y: &[u32], rows: &[usize]) -> u32 {
    let mut counts = std::collections::BTreeMap::<u32, usize>::new();
    for &r in rows {
        *counts.entry(y[r]).or_default() += 1;
    }
    let mut best = (0u32, 0usize);
    for (&c, &k) in &counts {
        if k > best.1 {
            best = (c, k);
        }
    }
    best.0
}

trait FeatureModel: Send + Sync {
    fn predict(&self, features: &[f64]) -> Outcome;
}

struct FeatureRule<M> {
    pre: Preprocessor,
    model: M,
    provenance: Provenance,
}

impl<M: FeatureModel + 'static> FeatureRule<M> {
    fn boxed(pre: Preprocessor, model: M, provenance: Provenance) -> Box<dyn PredictionRule> {
        Box::new(FeatureRule {
            pre,
            model,
            provenance,
        })
    }
}

impl<M: FeatureModel> PredictionRule for FeatureRule<M> {
    fn predict_row(&self, data: &Dataset, row: usize) -> Outcome {
        let mut buf = vec![0.0; self.pre.width()];
        self.pre.transform_row(data, row, &mut buf);
        self.model.predict(&buf)
    }

    fn predict_rows(&self, data: &Dataset, rows: &[usize], out: &mut [Outcome]) {
        let mut buf = vec![0.0; self.pre.width()];
        for (slot, &row) in out.iter_mut().zip(rows) {
            self.pre.transform_row(data, row, &mut buf);
            *slot = self.model.predict(&buf);
        }
    }

    fn provenance(&self) -> &Provenance {
        &self.provenance
    }
}

fn back_transform(v: f64, log: bool) -> f64 {
    if log {
        v.exp_m1()
    } else {
        v
    }
}

struct LinearModel {
    fit: LinearFit,
    log: bool,
}

impl FeatureModel for LinearModel {
    fn predict(&self, x: &[f64]) -> Outcome {
        Outcome::Real(back_transform(self.fit.predict(x), self.log))
    }
}

struct LogitModel {
    classes: Vec<u32>,
    /// One fit for two classes (positive = second class), else one per class.
    fits: Vec<LinearFit>,
}

impl FeatureModel for LogitModel {
    fn predict(&self, x: &[f64]) -> Outcome {
        if self.fits.len() == 1 {
            let z = self.fits[0].predict(x);
            return Outcome::Class(self.classes[(z > 0.0) as usize]);
        }
        let mut best = 0;
        let mut best_z = f64::NEG_INFINITY;
        for (k, f) in self.fits.iter().enumerate() {
            let z = f.predict(x);
            if z > best_z {
                best = k;
                best_z = z;
            }
        }
        Outcome::Class(self.classes[best])
    }
}

struct ForestModel {
    forest: Forest,
    classes: Option<Vec<u32>>,
    log: bool,
}

impl FeatureModel for ForestModel {
    fn predict(&self, x: &[f64]) -> Outcome {
        match &self.classes {
            Some(c) => Outcome::Class(c[self.forest.predict_class(x)]),
            None => Outcome::Real(back_transform(self.forest.predict_real(x), self.log)),
        }
    }
}

enum KnnTarget {
    Real(Vec<f64>),
    Class(Vec<usize>, Vec<u32>),
}

struct KnnModel {
    nn: NearestNeighbors,
    m: usize,
    target: KnnTarget,
    log: bool,
}

impl FeatureModel for KnnModel {
    fn predict(&self, x: &[f64]) -> Outcome {
        let idx = self.nn.neighbors(x, self.m);
        match &self.target {
            KnnTarget::Real(y) => Outcome::Real(back_transform(knn::mean_of(&idx, y), self.log)),
            KnnTarget::Class(y, classes) => Outcome::Class(classes[knn::vote(&idx, y, classes.len())]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numeric(y: Vec<f64>) -> Dataset {
        let x: Vec<f64> = (0..y.len()).map(|i| i as f64).collect();
        Dataset::builder()
            .numeric("x", x)
            .outcome_numeric("y", y)
            .build()
            .unwrap()
    }

    fn labels(y: &[&str]) -> Dataset {
        let x: Vec<f64> = (0..y.len()).map(|i| i as f64).collect();
        Dataset::builder()
            .numeric("x", x)
            .outcome_labels("y", y.iter().map(|s| s.to_string()).collect())
            .build()
            .unwrap()
    }

    #[test]
    fn baseline_mean_predicts_training_mean() {
        let d = numeric(vec![0.0, 2.0, 100.0]);
        let spec = LearnerSpec::new(Family::BaselineMean);
        let hp = spec.tune(&d, &[0, 1], 0).unwrap();
        assert_eq!(hp, Hyperparameters::None);
        let rule = spec.train(&d, &[0, 1], &hp, 0, Some(0)).unwrap();
        assert_eq!(rule.predict_row(&d, 2), Outcome::Real(1.0));
    }

    #[test]
    fn single_class_block_is_constant_majority() {
        let d = labels(&["own", "own", "rent", "own"]);
        let own = d.labels().code("own").unwrap();
        for family in [Family::LogitL1, Family::RandomForest, Family::Knn] {
            let spec = LearnerSpec::new(family);
            let rule = spec
                .train(&d, &[0, 1], &spec.default_hyperparameters(), 0, None)
                .unwrap();
            assert_eq!(rule.predict_row(&d, 2), Outcome::Class(own));
        }
    }

    #[test]
    fn single_class_tuning_subset_marks_fallback() {
        let d = labels(&["a", "a", "b"]);
        let spec = LearnerSpec::new(Family::LogitL1);
        let hp = spec.tune(&d, &[0, 1], 3).unwrap();
        assert_eq!(
            hp,
            Hyperparameters::MajorityFallback {
                class: d.labels().code("a").unwrap()
            }
        );
        // a block with both classes still trains with defaults
        spec.train(&d, &[0, 2], &hp, 0, None).unwrap();
    }

    #[test]
    fn family_outcome_compatibility() {
        let d = labels(&["a", "b"]);
        assert!(LearnerSpec::new(Family::Lasso).tune(&d, &[0, 1], 0).is_err());
        let d = numeric(vec![1.0, 2.0]);
        assert!(LearnerSpec::new(Family::LogitL1).tune(&d, &[0, 1], 0).is_err());
    }

    #[test]
    fn unbounded_depth_renders_as_word() {
        let hp = Hyperparameters::RandomForest {
            max_depth: None,
            min_leaf: 5,
        };
        let s = serde_json::to_string(&hp).unwrap();
        assert_eq!(s, r#"{"kind":"random_forest","max_depth":"unbounded","min_leaf":5}"#);
        let back: Hyperparameters = serde_json::from_str(&s).unwrap();
        assert_eq!(back, hp);
    }

    #[test]
    fn log_outcome_round_trips_constant() {
        let d = numeric(vec![3.0; 12]);
        let mut spec = LearnerSpec::new(Family::Lasso);
        spec.log_outcome = true;
        let rows: Vec<usize> = (0..12).collect();
        let hp = spec.tune(&d, &rows, 1).unwrap();
        let rule = spec.train(&d, &rows, &hp, 0, None).unwrap();
        match rule.predict_row(&d, 0) {
            Outcome::Real(v) => assert!((v - 3.0).abs() < 1e-9),
            _ => panic!(),
        }
    }

    #[test]
    fn tuning_subset_is_seeded_and_sized() {
        let a = tuning_subset(100, 10, 4);
        assert_eq!(a.len(), 10);
        assert_eq!(a, tuning_subset(100, 10, 4));
        assert_ne!(a, tuning_subset(100, 10, 5));
    }
}
