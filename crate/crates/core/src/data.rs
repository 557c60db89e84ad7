//! Typed tabular datasets.
//!
//! A [`Dataset`] holds covariates, exactly one outcome, and optionally a
//! fixed-rule prediction column plus the treatment-effect columns used by
//! [`crate::cate`]. Outcomes are typed at the schema level as numeric or
//! label; there is no implicit coercion between the two.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{EssError, Result};
use crate::loss::Outcome;

/// Role a column plays in the analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    NumericCovariate,
    CategoricalCovariate,
    Outcome,
    FixedRulePrediction,
    /// Fixed-rule prediction of the conditional average treatment effect.
    CatePrediction,
    Treatment,
    Propensity,
    TransformedOutcome,
    Id,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeType {
    Numeric,
    Label,
}

/// Interned string labels; codes are assigned in first-seen order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocabulary {
    labels: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn intern(&mut self, label: &str) -> u32 {
        if let Some(&code) = self.index.get(label) {
            return code;
        }
        let code = self.labels.len() as u32;
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), code);
        code
    }

    pub fn code(&self, label: &str) -> Option<u32> {
        self.index.get(label).copied()
    }

    pub fn label(&self, code: u32) -> &str {
        &self.labels[code as usize]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Outcome-typed column: numeric values or label codes into the dataset's
/// shared label vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Real(Vec<f64>),
    Class(Vec<u32>),
}

impl Target {
    pub fn len(&self) -> usize {
        match self {
            Target::Real(v) => v.len(),
            Target::Class(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn get(&self, row: usize) -> Outcome {
        match self {
            Target::Real(v) => Outcome::Real(v[row]),
            Target::Class(v) => Outcome::Class(v[row]),
        }
    }

    pub fn outcome_type(&self) -> OutcomeType {
        match self {
            Target::Real(_) => OutcomeType::Numeric,
            Target::Class(_) => OutcomeType::Label,
        }
    }

    pub fn as_real(&self) -> Option<&[f64]> {
        match self {
            Target::Real(v) => Some(v),
            Target::Class(_) => None,
        }
    }

    pub fn as_class(&self) -> Option<&[u32]> {
        match self {
            Target::Class(v) => Some(v),
            Target::Real(_) => None,
        }
    }

    fn subset(&self, rows: &[usize]) -> Target {
        match self {
            Target::Real(v) => Target::Real(rows.iter().map(|&r| v[r]).collect()),
            Target::Class(v) => Target::Class(rows.iter().map(|&r| v[r]).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericColumn {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalColumn {
    pub name: String,
    pub levels: Vocabulary,
    pub codes: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
struct Named<T> {
    name: String,
    values: T,
}

/// Validated, immutable dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    ids: Vec<String>,
    id_column: Option<String>,
    numeric: Vec<NumericColumn>,
    categorical: Vec<CategoricalColumn>,
    outcome: Named<Target>,
    labels: Vocabulary,
    prediction: Option<Named<Target>>,
    cate_prediction: Option<Named<Vec<f64>>>,
    treatment: Option<Named<Vec<u8>>>,
    propensity: Option<Named<Vec<f64>>>,
    transformed: Option<Named<Vec<f64>>>,
}

impl Dataset {
    pub fn builder() -> DatasetBuilder {
        DatasetBuilder::default()
    }

    pub fn n(&self) -> usize {
        self.outcome.values.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn outcome_name(&self) -> &str {
        &self.outcome.name
    }

    pub fn outcome(&self) -> &Target {
        &self.outcome.values
    }

    pub fn outcome_type(&self) -> OutcomeType {
        self.outcome.values.outcome_type()
    }

    /// Label vocabulary shared by the outcome and the fixed-rule prediction.
    pub fn labels(&self) -> &Vocabulary {
        &self.labels
    }

    pub fn prediction(&self) -> Option<&Target> {
        self.prediction.as_ref().map(|p| &p.values)
    }

    pub fn prediction_name(&self) -> Option<&str> {
        self.prediction.as_ref().map(|p| p.name.as_str())
    }

    pub fn cate_prediction(&self) -> Option<&[f64]> {
        self.cate_prediction.as_ref().map(|p| p.values.as_slice())
    }

    pub fn treatment(&self) -> Option<&[u8]> {
        self.treatment.as_ref().map(|p| p.values.as_slice())
    }

    pub fn propensity(&self) -> Option<&[f64]> {
        self.propensity.as_ref().map(|p| p.values.as_slice())
    }

    pub fn transformed_outcome(&self) -> Option<&[f64]> {
        self.transformed.as_ref().map(|p| p.values.as_slice())
    }

    pub fn numeric_columns(&self) -> &[NumericColumn] {
        &self.numeric
    }

    pub fn categorical_columns(&self) -> &[CategoricalColumn] {
        &self.categorical
    }

    /// Column names with their roles, covariates first.
    pub fn schema(&self) -> Vec<(String, Role)> {
        let mut out = Vec::new();
        if let Some(id) = &self.id_column {
            out.push((id.clone(), Role::Id));
        }
        out.extend(self.numeric.iter().map(|c| (c.name.clone(), Role::NumericCovariate)));
        out.extend(
            self.categorical
                .iter()
                .map(|c| (c.name.clone(), Role::CategoricalCovariate)),
        );
        out.push((self.outcome.name.clone(), Role::Outcome));
        if let Some(p) = &self.prediction {
            out.push((p.name.clone(), Role::FixedRulePrediction));
        }
        if let Some(p) = &self.cate_prediction {
            out.push((p.name.clone(), Role::CatePrediction));
        }
        if let Some(p) = &self.treatment {
            out.push((p.name.clone(), Role::Treatment));
        }
        if let Some(p) = &self.propensity {
            out.push((p.name.clone(), Role::Propensity));
        }
        if let Some(p) = &self.transformed {
            out.push((p.name.clone(), Role::TransformedOutcome));
        }
        out
    }

    /// Number of covariate columns (numeric plus categorical).
    pub fn covariate_count(&self) -> usize {
        self.numeric.len() + self.categorical.len()
    }

    /// Rendered value of a named column at `row`, used by prompt templates.
    pub fn render_value(&self, column: &str, row: usize) -> Option<String> {
        if let Some(c) = self.numeric.iter().find(|c| c.name == column) {
            return Some(format_number(c.values[row]));
        }
        if let Some(c) = self.categorical.iter().find(|c| c.name == column) {
            return Some(c.levels.label(c.codes[row]).to_string());
        }
        if self.id_column.as_deref() == Some(column) {
            return Some(self.ids[row].clone());
        }
        if let Some(p) = &self.treatment {
            if p.name == column {
                return Some(p.values[row].to_string());
            }
        }
        if let Some(p) = &self.propensity {
            if p.name == column {
                return Some(format_number(p.values[row]));
            }
        }
        None
    }

    /// New dataset restricted to `rows`, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let pick = |v: &Vec<f64>| rows.iter().map(|&r| v[r]).collect::<Vec<_>>();
        Dataset {
            ids: rows.iter().map(|&r| self.ids[r].clone()).collect(),
            id_column: self.id_column.clone(),
            numeric: self
                .numeric
                .iter()
                .map(|c| NumericColumn {
                    name: c.name.clone(),
                    values: pick(&c.values),
                })
                .collect(),
            categorical: self
                .categorical
                .iter()
                .map(|c| CategoricalColumn {
                    name: c.name.clone(),
                    levels: c.levels.clone(),
                    codes: rows.iter().map(|&r| c.codes[r]).collect(),
                })
                .collect(),
            outcome: Named {
                name: self.outcome.name.clone(),
                values: self.outcome.values.subset(rows),
            },
            labels: self.labels.clone(),
            prediction: self.prediction.as_ref().map(|p| Named {
                name: p.name.clone(),
                values: p.values.subset(rows),
            }),
            cate_prediction: self.cate_prediction.as_ref().map(|p| Named {
                name: p.name.clone(),
                values: pick(&p.values),
            }),
            treatment: self.treatment.as_ref().map(|p| Named {
                name: p.name.clone(),
                values: rows.iter().map(|&r| p.values[r]).collect(),
            }),
            propensity: self.propensity.as_ref().map(|p| Named {
                name: p.name.clone(),
                values: pick(&p.values),
            }),
            transformed: self.transformed.as_ref().map(|p| Named {
                name: p.name.clone(),
                values: pick(&p.values),
            }),
        }
    }

    /// Replaces the outcome with a numeric column and the fixed-rule
    /// prediction with `prediction`. Treatment-effect columns are dropped.
    pub fn with_numeric_problem(
        &self,
        outcome_name: &str,
        outcome: Vec<f64>,
        prediction: Option<(&str, Vec<f64>)>,
    ) -> Result<Dataset> {
        if outcome.len() != self.n() {
            return Err(EssError::schema("replacement outcome has the wrong length"));
        }
        check_finite(outcome_name, &outcome)?;
        if let Some((name, p)) = &prediction {
            if p.len() != self.n() {
                return Err(EssError::schema("replacement prediction has the wrong length"));
            }
            check_finite(name, p)?;
        }
        Ok(Dataset {
            ids: self.ids.clone(),
            id_column: self.id_column.clone(),
            numeric: self.numeric.clone(),
            categorical: self.categorical.clone(),
            outcome: Named {
                name: outcome_name.to_string(),
                values: Target::Real(outcome),
            },
            labels: Vocabulary::default(),
            prediction: prediction.map(|(name, p)| Named {
                name: name.to_string(),
                values: Target::Real(p),
            }),
            cate_prediction: None,
            treatment: None,
            propensity: None,
            transformed: None,
        })
    }

    /// Adds (or replaces) the fixed-rule prediction column from raw cells,
    /// typed against the outcome. Label predictions may introduce classes
    /// that never occur in the outcome.
    pub fn with_prediction_cells(&self, name: &str, cells: &[String]) -> Result<Dataset> {
        if cells.len() != self.n() {
            return Err(EssError::schema(format!(
                "prediction column '{name}' has {} values for {} rows",
                cells.len(),
                self.n()
            )));
        }
        let mut out = self.clone();
        let values = match self.outcome_type() {
            OutcomeType::Numeric => Target::Real(parse_numeric(name, cells)?),
            OutcomeType::Label => {
                Target::Class(cells.iter().map(|c| out.labels.intern(c.trim())).collect())
            }
        };
        out.prediction = Some(Named {
            name: name.to_string(),
            values,
        });
        Ok(out)
    }
}

fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn check_finite(name: &str, values: &[f64]) -> Result<()> {
    if let Some(row) = values.iter().position(|v| !v.is_finite()) {
        return Err(EssError::schema(format!(
            "column '{name}' has a missing or non-finite value at row {row}"
        )));
    }
    Ok(())
}

fn parse_numeric(name: &str, cells: &[String]) -> Result<Vec<f64>> {
    cells
        .iter()
        .enumerate()
        .map(|(row, c)| {
            c.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                EssError::schema(format!(
                    "column '{name}' row {row}: cannot parse '{c}' as a number"
                ))
            })
        })
        .collect()
}

enum RawTarget {
    Real(Vec<f64>),
    Labels(Vec<String>),
}

/// Collects columns and validates the dataset invariants in [`build`].
///
/// [`build`]: DatasetBuilder::build
#[derive(Default)]
pub struct DatasetBuilder {
    ids: Option<(Option<String>, Vec<String>)>,
    numeric: Vec<NumericColumn>,
    categorical: Vec<(String, Vec<String>)>,
    outcome: Vec<(String, RawTarget)>,
    prediction: Vec<(String, RawTarget)>,
    cate_prediction: Vec<(String, Vec<f64>)>,
    treatment: Vec<(String, Vec<f64>)>,
    propensity: Vec<(String, Vec<f64>)>,
    transformed: Vec<(String, Vec<f64>)>,
}

impl DatasetBuilder {
    pub fn ids(mut self, column: Option<&str>, ids: Vec<String>) -> Self {
        self.ids = Some((column.map(str::to_string), ids));
        self
    }

    pub fn numeric(mut self, name: &str, values: Vec<f64>) -> Self {
        self.numeric.push(NumericColumn {
            name: name.to_string(),
            values,
        });
        self
    }

    pub fn categorical(mut self, name: &str, values: Vec<String>) -> Self {
        self.categorical.push((name.to_string(), values));
        self
    }

    pub fn outcome_numeric(mut self, name: &str, values: Vec<f64>) -> Self {
        self.outcome.push((name.to_string(), RawTarget::Real(values)));
        self
    }

    pub fn outcome_labels(mut self, name: &str, values: Vec<String>) -> Self {
        self.outcome.push((name.to_string(), RawTarget::Labels(values)));
        self
    }

    pub fn prediction_numeric(mut self, name: &str, values: Vec<f64>) -> Self {
        self.prediction.push((name.to_string(), RawTarget::Real(values)));
        self
    }

    pub fn prediction_labels(mut self, name: &str, values: Vec<String>) -> Self {
        self.prediction
            .push((name.to_string(), RawTarget::Labels(values)));
        self
    }

    pub fn cate_prediction(mut self, name: &str, values: Vec<f64>) -> Self {
        self.cate_prediction.push((name.to_string(), values));
        self
    }

    pub fn treatment(mut self, name: &str, values: Vec<f64>) -> Self {
        self.treatment.push((name.to_string(), values));
        self
    }

    pub fn propensity(mut self, name: &str, values: Vec<f64>) -> Self {
        self.propensity.push((name.to_string(), values));
        self
    }

    pub fn transformed_outcome(mut self, name: &str, values: Vec<f64>) -> Self {
        self.transformed.push((name.to_string(), values));
        self
    }

    pub fn build(self) -> Result<Dataset> {
        let mut outcome = self.outcome;
        if outcome.len() != 1 {
            return Err(EssError::schema(format!(
                "exactly one outcome column is required, found {}",
                outcome.len()
            )));
        }
        for (role, count) in [
            ("fixed_rule_prediction", self.prediction.len()),
            ("cate_prediction", self.cate_prediction.len()),
            ("treatment", self.treatment.len()),
            ("propensity", self.propensity.len()),
            ("transformed_outcome", self.transformed.len()),
        ] {
            if count > 1 {
                return Err(EssError::schema(format!(
                    "at most one {role} column is allowed, found {count}"
                )));
            }
        }
        let (outcome_name, raw_outcome) = outcome.pop().expect("one outcome");
        let n = match &raw_outcome {
            RawTarget::Real(v) => v.len(),
            RawTarget::Labels(v) => v.len(),
        };
        if n == 0 {
            return Err(EssError::schema("dataset has no rows"));
        }

        let mut names = HashSet::new();
        let mut check_len = |name: &str, len: usize| -> Result<()> {
            if !names.insert(name.to_string()) {
                return Err(EssError::schema(format!("duplicate column '{name}'")));
            }
            if len != n {
                return Err(EssError::schema(format!(
                    "column '{name}' has {len} values, expected {n}"
                )));
            }
            Ok(())
        };
        check_len(&outcome_name, n)?;
        for c in &self.numeric {
            check_len(&c.name, c.values.len())?;
            check_finite(&c.name, &c.values)?;
        }
        for (name, v) in &self.categorical {
            check_len(name, v.len())?;
        }
        for (name, p) in &self.prediction {
            let len = match p {
                RawTarget::Real(v) => v.len(),
                RawTarget::Labels(v) => v.len(),
            };
            check_len(name, len)?;
        }
        for (name, v) in self
            .cate_prediction
            .iter()
            .chain(&self.treatment)
            .chain(&self.propensity)
            .chain(&self.transformed)
        {
            check_len(name, v.len())?;
            check_finite(name, v)?;
        }

        let mut labels = Vocabulary::default();
        let outcome_values = match raw_outcome {
            RawTarget::Real(v) => {
                check_finite(&outcome_name, &v)?;
                Target::Real(v)
            }
            RawTarget::Labels(v) => {
                check_labels(&outcome_name, &v)?;
                Target::Class(v.iter().map(|s| labels.intern(s)).collect())
            }
        };
        let prediction = match self.prediction.into_iter().next() {
            None => None,
            Some((name, raw)) => {
                let values = match (raw, outcome_values.outcome_type()) {
                    (RawTarget::Real(v), OutcomeType::Numeric) => {
                        check_finite(&name, &v)?;
                        Target::Real(v)
                    }
                    (RawTarget::Labels(v), OutcomeType::Label) => {
                        check_labels(&name, &v)?;
                        Target::Class(v.iter().map(|s| labels.intern(s)).collect())
                    }
                    _ => {
                        return Err(EssError::schema(format!(
                            "prediction column '{name}' is not typed like outcome '{outcome_name}'"
                        )))
                    }
                };
                Some(Named { name, values })
            }
        };

        let treatment = match self.treatment.into_iter().next() {
            None => None,
            Some((name, v)) => {
                let mut codes = Vec::with_capacity(n);
                for (row, &t) in v.iter().enumerate() {
                    if t == 0.0 {
                        codes.push(0u8);
                    } else if t == 1.0 {
                        codes.push(1u8);
                    } else {
                        return Err(EssError::schema(format!(
                            "treatment column '{name}' row {row}: value {t} is not in {{0,1}}"
                        )));
                    }
                }
                Some(Named { name, values: codes })
            }
        };
        let propensity = match self.propensity.into_iter().next() {
            None => None,
            Some((name, v)) => {
                if let Some(row) = v.iter().position(|&p| !(p > 0.0 && p < 1.0)) {
                    return Err(EssError::schema(format!(
                        "propensity column '{name}' row {row}: value {} is not in (0,1)",
                        v[row]
                    )));
                }
                Some(Named { name, values: v })
            }
        };

        let categorical = self
            .categorical
            .into_iter()
            .map(|(name, values)| {
                check_labels(&name, &values)?;
                let mut levels = Vocabulary::default();
                let codes = values.iter().map(|s| levels.intern(s)).collect();
                Ok(CategoricalColumn { name, levels, codes })
            })
            .collect::<Result<Vec<_>>>()?;

        let (id_column, ids) = match self.ids {
            Some((col, ids)) => {
                if let Some(c) = &col {
                    check_len(c, ids.len())?;
                } else if ids.len() != n {
                    return Err(EssError::schema("id list has the wrong length"));
                }
                let mut seen = HashSet::new();
                for id in &ids {
                    if !seen.insert(id.as_str()) {
                        return Err(EssError::schema(format!("duplicate row id '{id}'")));
                    }
                }
                (col, ids)
            }
            None => (None, (1..=n).map(|i| i.to_string()).collect()),
        };

        Ok(Dataset {
            ids,
            id_column,
            numeric: self.numeric,
            categorical,
            outcome: Named {
                name: outcome_name,
                values: outcome_values,
            },
            labels,
            prediction,
            cate_prediction: self
                .cate_prediction
                .into_iter()
                .next()
                .map(|(name, values)| Named { name, values }),
            treatment,
            propensity,
            transformed: self
                .transformed
                .into_iter()
                .next()
                .map(|(name, values)| Named { name, values }),
        })
    }
}

fn check_labels(name: &str, values: &[String]) -> Result<()> {
    if let Some(row) = values.iter().position(|s| s.trim().is_empty()) {
        return Err(EssError::schema(format!(
            "column '{name}' has a missing value at row {row}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn builds_and_types_outcome() {
        let d = Dataset::builder()
            .numeric("age", vec![30.0, 40.0])
            .outcome_labels("own", strings(&["1", "5"]))
            .prediction_labels("llm", strings(&["1", "8"]))
            .build()
            .unwrap();
        assert_eq!(d.n(), 2);
        assert_eq!(d.outcome_type(), OutcomeType::Label);
        // "8" is a class that never appears in the outcome.
        assert_eq!(d.labels().len(), 3);
        assert_eq!(d.ids(), &["1".to_string(), "2".to_string()]);
    }

    #[test]
    fn rejects_missing_values_and_bad_roles() {
        let err = Dataset::builder()
            .numeric("x", vec![1.0, f64::NAN])
            .outcome_numeric("y", vec![1.0, 2.0])
            .build()
            .unwrap_err();
        assert!(err.to_string().contains("row 1"));

        let err = Dataset::builder()
            .outcome_numeric("y", vec![1.0])
            .outcome_numeric("z", vec![1.0])
            .build()
            .unwrap_err();
        assert!(err.to_string().contains("exactly one outcome"));

        let err = Dataset::builder()
            .outcome_numeric("y", vec![1.0, 2.0])
            .prediction_labels("p", strings(&["a", "b"]))
            .build()
            .unwrap_err();
        assert!(err.to_string().contains("not typed like"));
    }

    #[test]
    fn treatment_and_propensity_domains() {
        let err = Dataset::builder()
            .outcome_numeric("y", vec![1.0, 2.0])
            .treatment("t", vec![0.0, 2.0])
            .build()
            .unwrap_err();
        assert!(err.to_string().contains("not in {0,1}"));

        let err = Dataset::builder()
            .outcome_numeric("y", vec![1.0, 2.0])
            .propensity("p", vec![0.5, 1.0])
            .build()
            .unwrap_err();
        assert!(err.to_string().contains("(0,1)"));
    }

    #[test]
    fn subset_keeps_alignment() {
        let d = Dataset::builder()
            .numeric("x", vec![1.0, 2.0, 3.0])
            .categorical("c", strings(&["a", "b", "a"]))
            .outcome_numeric("y", vec![10.0, 20.0, 30.0])
            .build()
            .unwrap();
        let s = d.subset(&[2, 0]);
        assert_eq!(s.outcome().as_real().unwrap(), &[30.0, 10.0]);
        assert_eq!(s.numeric_columns()[0].values, vec![3.0, 1.0]);
        assert_eq!(s.ids(), &["3".to_string(), "1".to_string()]);
        assert_eq!(s.render_value("c", 1).unwrap(), "a");
    }
}
