//! Machine-readable experiment reports: a results JSON document and the
//! lag-sweep figure table.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::dataset::FeatureSetId;
use crate::error::Result;
use crate::eval::{EvalResult, LagComparison, LagSweep, SkippedSubject};
use crate::features::Task;
use crate::models::{HyperParams, ModelKind};

pub const TOOL_NAME: &str = "diary-forecast";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Predicted PHQ-2 scores at or above this value raise an intervention alert.
pub const DEFAULT_ALERT_THRESHOLD: f64 = 6.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportPrediction {
    pub subject_id: String,
    pub date: NaiveDate,
    pub y_true: f64,
    pub y_pred: f64,
    /// Only forecast predictions carry an alert flag.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alert: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBlock {
    pub model: ModelKind,
    pub task: Task,
    pub pooled_mae: f64,
    pub mean_subject_mae: f64,
    pub n_predictions: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_alerts: Option<usize>,
    pub per_subject_mae: BTreeMap<String, f64>,
    pub per_fold_chosen_params: BTreeMap<String, HyperParams>,
    pub skipped: Vec<SkippedSubject>,
    pub predictions: Vec<ReportPrediction>,
}

impl ModelBlock {
    pub fn new(result: &EvalResult, task: Task, alert_threshold: f64) -> Self {
        let forecast = matches!(task, Task::Forecast(_));
        let predictions: Vec<ReportPrediction> = result
            .predictions
            .iter()
            .map(|p| ReportPrediction {
                subject_id: p.subject_id.clone(),
                date: p.date,
                y_true: p.y_true,
                y_pred: p.y_pred,
                alert: forecast.then_some(p.y_pred >= alert_threshold),
            })
            .collect();
        Self {
            model: result.model,
            task,
            pooled_mae: result.pooled_mae,
            mean_subject_mae: result.mean_subject_mae,
            n_predictions: predictions.len(),
            n_alerts: forecast.then(|| predictions.iter().filter(|p| p.alert == Some(true)).count()),
            per_subject_mae: result.per_subject_mae.clone(),
            per_fold_chosen_params: result.per_fold_chosen_params.clone(),
            skipped: result.skipped.clone(),
            predictions,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummaryRow {
    pub k: usize,
    pub pooled_mae: f64,
    pub mean_subject_mae: f64,
    pub mae_stddev_over_subjects: f64,
    pub n_subjects: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepBlock {
    pub model: ModelKind,
    pub rows: Vec<SweepSummaryRow>,
    /// Lag with the lowest pooled MAE. Reported for transparency; it is chosen
    /// on test folds and is not a tuned hyperparameter.
    pub best_k: usize,
    pub ttests: Vec<LagComparison>,
    pub per_lag: Vec<ModelBlock>,
}

impl SweepBlock {
    pub fn new(sweep: &LagSweep, alert_threshold: f64) -> Self {
        Self {
            model: sweep.model,
            rows: sweep
                .rows
                .iter()
                .map(|r| SweepSummaryRow {
                    k: r.k,
                    pooled_mae: r.pooled_mae,
                    mean_subject_mae: r.mean_subject_mae,
                    mae_stddev_over_subjects: r.mae_stddev_over_subjects,
                    n_subjects: r.per_subject_mae.len(),
                })
                .collect(),
            best_k: sweep.best_k,
            ttests: sweep.comparisons.clone(),
            per_lag: sweep
                .rows
                .iter()
                .zip(&sweep.results)
                .map(|(row, res)| ModelBlock::new(res, Task::Forecast(row.k), alert_threshold))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub tool_version: String,
    pub seed: u64,
    /// The full experiment configuration, echoed verbatim.
    pub config: serde_json::Value,
    pub feature_set: FeatureSetId,
    pub alert_threshold: f64,
    pub models: Vec<ModelBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lag_sweep: Option<SweepBlock>,
}

impl Report {
    pub fn new(config: serde_json::Value, seed: u64, feature_set: FeatureSetId, alert_threshold: f64) -> Self {
        Self {
            tool: TOOL_NAME.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            seed,
            config,
            feature_set,
            alert_threshold,
            models: Vec::new(),
            lag_sweep: None,
        }
    }

    /// Pretty-printed JSON with a trailing newline; identical inputs give identical bytes.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// `k,pooled_mae,mae_stddev_over_subjects`, one row per lag.
pub fn figure_csv(sweep: &LagSweep) -> String {
    let mut out = String::from("k,pooled_mae,mae_stddev_over_subjects\n");
    for r in &sweep.rows {
        let _ = writeln!(out, "{},{},{}", r.k, r.pooled_mae, r.mae_stddev_over_subjects);
    }
    out
}
