//! Feature construction fitted on training rows only.
//!
//! Numeric covariates are standardized with the population standard
//! deviation (divisor `m`) of the training rows. Categorical covariates keep
//! levels seen at least `rare_category_min_count` times in the training rows,
//! fold the rest (and anything unseen at apply time) into an "other" level,
//! and expand to indicators with the first level optionally dropped as the
//! reference. Regression outcomes can be winsorized at training quantiles.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{EssError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessOptions {
    /// Outcome winsorization quantiles for regression, `(low, high)`.
    pub winsorize: Option<(f64, f64)>,
    pub standardize_numeric: bool,
    pub rare_category_min_count: usize,
    pub one_hot_drop_reference: bool,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            winsorize: Some((0.01, 0.99)),
            standardize_numeric: true,
            rare_category_min_count: 50,
            one_hot_drop_reference: true,
        }
    }
}

impl PreprocessOptions {
    pub fn validate(&self) -> Result<()> {
        if let Some((lo, hi)) = self.winsorize {
            if !(0.0 <= lo && lo < hi && hi <= 1.0) {
                return Err(EssError::config(format!(
                    "winsorize quantiles must satisfy 0 <= low < high <= 1, got ({lo}, {hi})"
                )));
            }
        }
        if self.rare_category_min_count == 0 {
            return Err(EssError::config("rare_category_min_count must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericScaling {
    pub column: String,
    pub mean: f64,
    pub sd: f64,
    /// The column was constant on the training rows; `sd` was set to 1.
    pub constant: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryEncoding {
    pub column: String,
    /// Output slot per level code; `None` for the dropped reference level.
    slots: Vec<Option<usize>>,
    /// Slot for the collapsed "other" level.
    other_slot: Option<usize>,
    /// Codes folded into "other" because they were rare in training.
    pub collapsed: Vec<u32>,
    /// Codes kept as their own level.
    pub kept: Vec<u32>,
    kept_mask: Vec<bool>,
}

impl CategoryEncoding {
    pub fn is_collapsed(&self, code: u32) -> bool {
        !self.kept_mask.get(code as usize).copied().unwrap_or(false)
    }

    fn slot(&self, code: u32) -> Option<usize> {
        if self.is_collapsed(code) {
            self.other_slot
        } else {
            self.slots[code as usize]
        }
    }
}

/// A frozen covariate transform plus optional outcome clipping.
#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessor {
    numeric: Vec<NumericScaling>,
    categorical: Vec<CategoryEncoding>,
    width: usize,
    winsor: Option<(f64, f64)>,
}

impl Preprocessor {
    /// Fits on `rows` of `data`. `winsorize_outcome` applies only to numeric
    /// outcomes.
    pub fn fit(data: &Dataset, rows: &[usize], options: &PreprocessOptions) -> Result<Self> {
        options.validate()?;
        if rows.is_empty() {
            return Err(EssError::invalid("cannot fit preprocessing on zero rows"));
        }
        let m = rows.len() as f64;
        let numeric = data
            .numeric_columns()
            .iter()
            .map(|c| {
                if !options.standardize_numeric {
                    return NumericScaling {
                        column: c.name.clone(),
                        mean: 0.0,
                        sd: 1.0,
                        constant: false,
                    };
                }
                let mean = rows.iter().map(|&r| c.values[r]).sum::<f64>() / m;
                let var = rows
                    .iter()
                    .map(|&r| (c.values[r] - mean).powi(2))
                    .sum::<f64>()
                    / m;
                let sd = var.sqrt();
                let constant = !(sd > 1e-12 * (1.0 + mean.abs()));
                NumericScaling {
                    column: c.name.clone(),
                    mean,
                    sd: if constant { 1.0 } else { sd },
                    constant,
                }
            })
            .collect::<Vec<_>>();

        let mut width = numeric.len();
        let mut categorical = Vec::new();
        for c in data.categorical_columns() {
            let mut counts = vec![0usize; c.levels.len()];
            for &r in rows {
                counts[c.codes[r] as usize] += 1;
            }
            let kept_mask: Vec<bool> = counts
                .iter()
                .map(|&k| k >= options.rare_category_min_count)
                .collect();
            let kept: Vec<u32> = (0..counts.len() as u32)
                .filter(|&code| kept_mask[code as usize])
                .collect();
            let collapsed: Vec<u32> = (0..counts.len() as u32)
                .filter(|&code| !kept_mask[code as usize] && counts[code as usize] > 0)
                .collect();
            // Level order: kept levels by code, then "other".
            let mut slots = vec![None; counts.len()];
            let mut level_index = 0usize;
            for &code in &kept {
                if !(options.one_hot_drop_reference && level_index == 0) {
                    slots[code as usize] = Some(width);
                    width += 1;
                }
                level_index += 1;
            }
            let other_slot = if options.one_hot_drop_reference && level_index == 0 {
                None
            } else {
                width += 1;
                Some(width - 1)
            };
            categorical.push(CategoryEncoding {
                column: c.name.clone(),
                slots,
                other_slot,
                collapsed,
                kept,
                kept_mask,
            });
        }

        let winsor = match (options.winsorize, data.outcome().as_real()) {
            (Some((lo, hi)), Some(y)) => {
                let mut v: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
                v.sort_by(|a, b| a.total_cmp(b));
                Some((quantile_sorted(&v, lo), quantile_sorted(&v, hi)))
            }
            _ => None,
        };

        Ok(Preprocessor {
            numeric,
            categorical,
            width,
            winsor,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn numeric_scaling(&self) -> &[NumericScaling] {
        &self.numeric
    }

    pub fn category_encodings(&self) -> &[CategoryEncoding] {
        &self.categorical
    }

    pub fn winsor_cutpoints(&self) -> Option<(f64, f64)> {
        self.winsor
    }

    /// Names of numeric columns that were constant on the training rows.
    pub fn constant_columns(&self) -> Vec<&str> {
        self.numeric
            .iter()
            .filter(|s| s.constant)
            .map(|s| s.column.as_str())
            .collect()
    }

    pub fn transform_row(&self, data: &Dataset, row: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.width);
        for (j, (s, c)) in self.numeric.iter().zip(data.numeric_columns()).enumerate() {
            out[j] = (c.values[row] - s.mean) / s.sd;
        }
        out[self.numeric.len()..].fill(0.0);
        for (enc, c) in self.categorical.iter().zip(data.categorical_columns()) {
            if let Some(slot) = enc.slot(c.codes[row]) {
                out[slot] = 1.0;
            }
        }
    }

    /// Row-major design matrix for `rows`.
    pub fn matrix(&self, data: &Dataset, rows: &[usize]) -> Vec<f64> {
        let mut x = vec![0.0; rows.len() * self.width];
        if self.width > 0 {
            for (chunk, &r) in x.chunks_mut(self.width).zip(rows) {
                self.transform_row(data, r, chunk);
            }
        }
        x
    }

    /// Applies the fitted winsorization to a training outcome.
    pub fn clip_outcome(&self, y: f64) -> f64 {
        match self.winsor {
            Some((lo, hi)) => y.clamp(lo, hi),
            None => y,
        }
    }
}

/// Linear-interpolation quantile of sorted data (the common "type 7" rule).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
