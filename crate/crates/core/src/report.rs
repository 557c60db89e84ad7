//! Error-curve reports: per-size rows, a summary block and serializations.

use serde::Serialize;

use crate::error::{EssError, Result};
use crate::inference::{
    check_monotonicity, plugin_ess, z_quantile, MonotonicityViolation, PluginEss, SequentialResult, StepResult,
};
use crate::loss::{LossKind, MetricScale, RiskEstimate};
use crate::variance::Regime;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Tsv,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub train_size: usize,
    pub blocks: usize,
    pub regime: Regime,
    /// Learner risk on the report scale.
    pub risk: f64,
    pub se: f64,
    /// Half-width of the two-sided `1 - alpha` interval for the risk.
    pub ci_half_width: f64,
    pub e_rule: f64,
    pub diff: f64,
    pub t_stat: Option<f64>,
    pub lower_bound: f64,
    pub rejected: bool,
    pub degenerate: bool,
    pub variance_clipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveReport {
    pub outcome: String,
    pub rule_label: String,
    pub algorithm: String,
    pub loss: LossKind,
    pub scale: MetricScale,
    pub alpha: f64,
    pub rule_error: RiskEstimate,
    pub rows: Vec<CurveRow>,
    pub executed_steps: usize,
    pub n_hat: usize,
    pub exhausted: bool,
    pub duality_bound: Option<usize>,
    pub plugin: PluginEss,
    pub monotonicity: Vec<MonotonicityViolation>,
}

/// Row for one step; squared-loss risks move to the RMSE scale by the delta method.
pub fn curve_row(step: &StepResult, loss: LossKind, alpha: f64) -> Result<CurveRow> {
    let risk = step.risk(loss).report_scale()?;
    Ok(CurveRow {
        train_size: step.train_size,
        blocks: step.blocks,
        regime: step.regime,
        risk: risk.value,
        se: risk.se,
        ci_half_width: z_quantile(1.0 - alpha / 2.0) * risk.se,
        e_rule: step.e_rule,
        diff: step.diff,
        t_stat: step.t_stat,
        lower_bound: step.lower_bound,
        rejected: step.rejected,
        degenerate: step.degenerate,
        variance_clipped: step.variance.clipped,
    })
}

/// Builds the report from a sequential or curve-mode result.
pub fn curve_report(
    result: &SequentialResult,
    outcome: &str,
    rule_label: &str,
    algorithm: &str,
    loss: LossKind,
) -> Result<CurveReport> {
    let steps = result.curve.as_deref().unwrap_or(&result.steps);
    if steps.is_empty() {
        return Err(EssError::invalid("cannot report a curve with zero steps"));
    }
    let rows = steps
        .iter()
        .map(|s| curve_row(s, loss, result.alpha))
        .collect::<Result<Vec<_>>>()?;
    let raw_curve: Vec<(usize, f64)> = steps.iter().map(|s| (s.train_size, s.e_cv)).collect();
    let mono: Vec<(usize, f64, f64)> = steps.iter().map(|s| (s.train_size, s.e_cv, s.e_cv_se)).collect();
    let rule_error = result.e_rule.report_scale()?;
    Ok(CurveReport {
        outcome: outcome.to_string(),
        rule_label: rule_label.to_string(),
        algorithm: algorithm.to_string(),
        loss,
        scale: rule_error.scale,
        alpha: result.alpha,
        rule_error,
        rows,
        executed_steps: result.steps.len(),
        n_hat: result.n_hat,
        exhausted: result.exhausted,
        duality_bound: result.duality_bound,
        plugin: plugin_ess(&raw_curve, result.e_rule.value),
        monotonicity: check_monotonicity(&mono),
    })
}

fn percent(alpha: f64) -> String {
    let p = 100.0 * (1.0 - alpha);
    let s = format!("{p:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

impl CurveReport {
    /// Summary block: outcome, fixed-rule error, algorithm interval and the
    /// confidence statement.
    pub fn table_block(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("Outcome  {}\n", self.outcome));
        out.push_str(&format!("{} Error {:.2}\n", self.rule_label, self.rule_error.value));
        out.push_str(&format!("{}  [{}, ∞)\n", self.algorithm, self.n_hat));
        if self.exhausted {
            let last = self.rows.last().map_or(0, |r| r.train_size);
            out.push_str(&format!("N* > {last}\n"));
        }
        out.push_str(&format!(
            "N* ≥ {} with {}% confidence\n",
            self.n_hat,
            percent(self.alpha)
        ));
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| EssError::Numeric(format!("report serialization failed: {e}")))
    }

    /// Flat per-size table, tab separated, fixed precision.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(
            "N\tB\tregime\trisk\tse\tci_half_width\te_rule\tdiff\tt_stat\tlower_bound\trejected\tdegenerate\n",
        );
        for r in &self.rows {
            let t = r.t_stat.map_or_else(|| "NA".to_string(), |t| format!("{t:.10}"));
            out.push_str(&format!(
                "{}\t{}\t{}\t{:.10}\t{:.10}\t{:.10}\t{:.10}\t{:.10}\t{}\t{:.10}\t{}\t{}\n",
                r.train_size,
                r.blocks,
                r.regime,
                r.risk,
                r.se,
                r.ci_half_width,
                r.e_rule,
                r.diff,
                t,
                r.lower_bound,
                r.rejected,
                r.degenerate
            ));
        }
        out
    }

    pub fn render(&self, format: ReportFormat) -> Result<String> {
        match format {
            ReportFormat::Json => self.to_json(),
            ReportFormat::Tsv => Ok(self.to_tsv()),
        }
    }
}
