//! Delimited-text ingestion against a declared schema, and prediction joins.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use ess_core::{Dataset, OutcomeType, Role};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Column roles plus the outcome type. Columns not listed are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schema {
    pub outcome_type: OutcomeType,
    pub columns: BTreeMap<String, Role>,
}

impl Schema {
    /// Inline JSON (starting with `{`) or a path to a JSON file.
    pub fn load(spec: &str) -> Result<Schema, CliError> {
        let text = if spec.trim_start().starts_with('{') {
            spec.to_string()
        } else {
            std::fs::read_to_string(spec)
                .map_err(|e| CliError::Usage(format!("cannot read schema '{spec}': {e}")))?
        };
        let schema: Schema =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid schema: {e}")))?;
        let outcomes = schema.columns.values().filter(|r| **r == Role::Outcome).count();
        if outcomes != 1 {
            return Err(CliError::Usage(format!(
                "schema must declare exactly one outcome column, found {outcomes}"
            )));
        }
        Ok(schema)
    }
}

/// Header plus string cells, as read.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn read_table(path: &Path, delimiter: u8) -> Result<RawTable, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("cannot open '{}': {e}", path.display())))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Data(format!("cannot read header of '{}': {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.iter().all(|h| h.is_empty()) {
        return Err(CliError::Data(format!("'{}' is empty", path.display())));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Data(format!("row {}: {e}", i + 1)))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    if rows.is_empty() {
        return Err(CliError::Data(format!("'{}' has a header but no rows", path.display())));
    }
    Ok(RawTable { header, rows })
}

fn column_index(table: &RawTable, name: &str) -> Result<usize, CliError> {
    table
        .header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::Data(format!("column '{name}' declared in the schema is missing from the data")))
}

fn cells(table: &RawTable, col: usize, name: &str) -> Result<Vec<String>, CliError> {
    table
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let c = r[col].trim();
            if c.is_empty() {
                Err(CliError::Data(format!("row {}, column '{name}': missing value", i + 1)))
            } else {
                Ok(c.to_string())
            }
        })
        .collect()
}

fn numbers(table: &RawTable, col: usize, name: &str) -> Result<Vec<f64>, CliError> {
    cells(table, col, name)?
        .iter()
        .enumerate()
        .map(|(i, c)| {
            c.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Data(format!("row {}, column '{name}': cannot parse '{c}' as a number", i + 1)))
        })
        .collect()
}

/// Builds a typed dataset; columns follow the file's header order.
pub fn to_dataset(table: &RawTable, schema: &Schema) -> Result<Dataset, CliError> {
    for name in schema.columns.keys() {
        column_index(table, name)?;
    }
    let mut b = Dataset::builder();
    for (col, name) in table.header.iter().enumerate() {
        let Some(role) = schema.columns.get(name) else {
            continue;
        };
        b = match role {
            Role::NumericCovariate => b.numeric(name, numbers(table, col, name)?),
            Role::CategoricalCovariate => b.categorical(name, cells(table, col, name)?),
            Role::Outcome => match schema.outcome_type {
                OutcomeType::Numeric => b.outcome_numeric(name, numbers(table, col, name)?),
                OutcomeType::Label => b.outcome_labels(name, cells(table, col, name)?),
            },
            Role::FixedRulePrediction => match schema.outcome_type {
                OutcomeType::Numeric => b.prediction_numeric(name, numbers(table, col, name)?),
                OutcomeType::Label => b.prediction_labels(name, cells(table, col, name)?),
            },
            Role::CatePrediction => b.cate_prediction(name, numbers(table, col, name)?),
            Role::Treatment => b.treatment(name, numbers(table, col, name)?),
            Role::Propensity => b.propensity(name, numbers(table, col, name)?),
            Role::TransformedOutcome => b.transformed_outcome(name, numbers(table, col, name)?),
            Role::Id => b.ids(Some(name), cells(table, col, name)?),
        };
    }
    Ok(b.build()?)
}

pub fn ingest(path: &Path, schema: &Schema, delimiter: u8) -> Result<(RawTable, Dataset), CliError> {
    let table = read_table(path, delimiter)?;
    let data = to_dataset(&table, schema)?;
    log_summary(&data);
    Ok((table, data))
}

fn log_summary(data: &Dataset) {
    eprintln!("loaded {} rows", data.n());
    for c in data.numeric_columns() {
        let (lo, hi) = c
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let mean = c.values.iter().sum::<f64>() / c.values.len() as f64;
        eprintln!("  {}: numeric, mean {mean:.4}, range [{lo}, {hi}]", c.name);
    }
    for c in data.categorical_columns() {
        eprintln!("  {}: categorical, {} levels", c.name, c.levels.len());
    }
    match data.outcome_type() {
        OutcomeType::Numeric => eprintln!("  {}: numeric outcome", data.outcome_name()),
        OutcomeType::Label => eprintln!("  {}: label outcome, {} classes", data.outcome_name(), data.labels().len()),
    }
}

/// Reads `id<delim>value` lines (no header).
pub fn read_predictions(path: &Path, delimiter: u8) -> Result<Vec<(String, String)>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("cannot open '{}': {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Data(format!("predictions line {}: {e}", i + 1)))?;
        if rec.len() != 2 {
            return Err(CliError::Data(format!(
                "predictions line {}: expected 2 fields (id, value), found {}",
                i + 1,
                rec.len()
            )));
        }
        out.push((rec[0].trim().to_string(), rec[1].trim().to_string()));
    }
    Ok(out)
}

/// Values in dataset row order. Every id must appear exactly once.
pub fn align_predictions(ids: &[String], preds: &[(String, String)]) -> Result<Vec<String>, CliError> {
    let mut by_id: HashMap<&str, &str> = HashMap::new();
    let mut duplicates = Vec::new();
    for (id, v) in preds {
        if by_id.insert(id, v).is_some() {
            duplicates.push(id.clone());
        }
    }
    if !duplicates.is_empty() {
        return Err(CliError::Data(format!("duplicate prediction ids: {}", duplicates.join(", "))));
    }
    let known: std::collections::HashSet<&str> = ids.iter().map(String::as_str).collect();
    let unknown: Vec<&str> = preds.iter().map(|(id, _)| id.as_str()).filter(|id| !known.contains(id)).collect();
    if !unknown.is_empty() {
        return Err(CliError::Data(format!("predictions for unknown ids: {}", unknown.join(", "))));
    }
    let missing: Vec<&str> = ids.iter().map(String::as_str).filter(|id| !by_id.contains_key(id)).collect();
    if !missing.is_empty() {
        return Err(CliError::Data(format!("missing predictions for ids: {}", missing.join(", "))));
    }
    Ok(ids.iter().map(|id| by_id[id.as_str()].to_string()).collect())
}

pub fn join_predictions(data: &Dataset, preds: &[(String, String)], name: &str) -> Result<Dataset, CliError> {
    let cells = align_predictions(data.ids(), preds)?;
    Ok(data.with_prediction_cells(name, &cells)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn preds(v: &[(&str, &str)]) -> Vec<(String, String)> {
        v.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn alignment_follows_row_order() {
        let out = align_predictions(&ids(&["a", "b"]), &preds(&[("b", "2"), ("a", "1")])).unwrap();
        assert_eq!(out, vec!["1", "2"]);
    }

    #[test]
    fn missing_and_duplicate_ids() {
        let e = align_predictions(&ids(&["a", "b", "c"]), &preds(&[("a", "1"), ("c", "3")])).unwrap_err();
        assert!(e.to_string().contains("missing predictions for ids: b"), "{e}");
        let e = align_predictions(&ids(&["a"]), &preds(&[("a", "1"), ("a", "2")])).unwrap_err();
        assert!(e.to_string().contains("duplicate"), "{e}");
    }

    #[test]
    fn schema_needs_one_outcome() {
        assert!(Schema::load(r#"{"outcome_type":"numeric","columns":{"x":"numeric_covariate"}}"#).is_err());
        let s = Schema::load(r#"{"outcome_type":"label","columns":{"y":"outcome"}}"#).unwrap();
        assert_eq!(s.columns["y"], Role::Outcome);
    }
}
