//! Design matrices for same-day prediction and k-lag forecasting.

use std::fmt;
use std::str::FromStr;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::dataset::{Cohort, FeatureSetId, Phq2Score, SubjectSeries};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::preprocess::{filter_labels, impute_linear, FilterRule};

pub const MAX_LAG: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "lag")]
pub enum Task {
    /// Features of the label day itself.
    SameDay,
    /// Features of the `lag` days before the label day, most recent first.
    Forecast(usize),
}

impl Task {
    pub fn validate(self) -> Result<Self> {
        match self {
            Task::Forecast(k) if !(1..=MAX_LAG).contains(&k) => Err(Error::InvalidLag(k)),
            t => Ok(t),
        }
    }

    /// Number of feature days concatenated per row.
    pub fn days_per_row(self) -> usize {
        match self {
            Task::SameDay => 1,
            Task::Forecast(k) => k,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::SameDay => f.write_str("sameday"),
            Task::Forecast(k) => write!(f, "forecast(k={k})"),
        }
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "sameday" | "same-day" => Ok(Task::SameDay),
            _ => s
                .strip_prefix("forecast")
                .map(|rest| rest.trim_start_matches([':', '=']))
                .and_then(|k| if k.is_empty() { Some(1) } else { k.parse().ok() })
                .map(Task::Forecast)
                .ok_or_else(|| format!("unknown task {s:?} (expected sameday or forecast:<k>)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RowKey {
    pub subject_id: String,
    pub date: NaiveDate,
}

/// Feature rows, aligned labels and the (subject, label date) each row belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub x: Matrix,
    pub labels: Vec<Phq2Score>,
    pub provenance: Vec<RowKey>,
}

impl DesignMatrix {
    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.x.n_cols()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.labels.iter().map(|l| l.as_f64()).collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> DesignMatrix {
        DesignMatrix {
            x: self.x.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            provenance: idx.iter().map(|&i| self.provenance[i].clone()).collect(),
        }
    }

    /// Stacks blocks in the order given. All blocks must share a width.
    pub fn concat<'a, I>(blocks: I) -> Result<DesignMatrix>
    where
        I: IntoIterator<Item = &'a DesignMatrix>,
    {
        let mut width = None;
        let mut data = Vec::new();
        let mut labels = Vec::new();
        let mut provenance = Vec::new();
        for b in blocks {
            let w = *width.get_or_insert(b.n_cols());
            b.x.check_width(w)?;
            data.extend_from_slice(b.x.as_slice());
            labels.extend_from_slice(&b.labels);
            provenance.extend(b.provenance.iter().cloned());
        }
        let n = labels.len();
        Ok(DesignMatrix {
            x: Matrix::new(n, width.unwrap_or(0), data)?,
            labels,
            provenance,
        })
    }
}

/// Rows contributed by one subject. `Ok(None)` when no label survives the filter.
pub fn subject_rows(
    series: &SubjectSeries,
    fs: FeatureSetId,
    task: Task,
    rule: FilterRule,
) -> Result<Option<DesignMatrix>> {
    let task = task.validate()?;
    let retained = filter_labels(series, fs, rule);
    if retained.is_empty() {
        return Ok(None);
    }
    let imputed = impute_linear(series, fs)?;
    let first = imputed.first_date().expect("imputed series is non-empty");
    let width = imputed.records[0].esm.len() + imputed.records[0].diary.len();
    let row_width = width * task.days_per_row();

    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut provenance = Vec::new();
    for date in retained {
        let feature_days: Vec<NaiveDate> = match task {
            Task::SameDay => vec![date],
            Task::Forecast(k) => {
                let days: Vec<NaiveDate> = (1..=k as u64).filter_map(|b| date.checked_sub_days(Days::new(b))).collect();
                if days.len() < k || days[k - 1] < first {
                    continue;
                }
                days
            }
        };
        for d in feature_days {
            // The imputed series holds one record per calendar day from `first`.
            let rec = &imputed.records[(d - first).num_days() as usize];
            data.extend(rec.cells().map(|c| c.expect("imputed cell")));
        }
        let label = series
            .record_on(date)
            .and_then(|r| r.phq2)
            .expect("retained dates carry labels");
        labels.push(label);
        provenance.push(RowKey {
            subject_id: series.subject_id.clone(),
            date,
        });
    }
    if labels.is_empty() {
        return Ok(None);
    }
    let n = labels.len();
    Ok(Some(DesignMatrix {
        x: Matrix::new(n, row_width, data)?,
        labels,
        provenance,
    }))
}

/// Per-subject blocks in cohort order; subjects without rows are omitted.
pub fn subject_blocks(
    cohort: &Cohort,
    fs: FeatureSetId,
    task: Task,
    rule: FilterRule,
) -> Result<Vec<DesignMatrix>> {
    let mut blocks = Vec::new();
    for s in &cohort.subjects {
        if let Some(b) = subject_rows(s, fs, task, rule)? {
            blocks.push(b);
        }
    }
    Ok(blocks)
}

pub fn build_design(cohort: &Cohort, fs: FeatureSetId, task: Task, rule: FilterRule) -> Result<DesignMatrix> {
    let blocks = subject_blocks(cohort, fs, task, rule)?;
    if blocks.is_empty() {
        return Err(Error::NoRows);
    }
    DesignMatrix::concat(&blocks)
}

pub fn build_sameday(cohort: &Cohort, fs: FeatureSetId, rule: FilterRule) -> Result<DesignMatrix> {
    build_design(cohort, fs, Task::SameDay, rule)
}

pub fn build_lagged(cohort: &Cohort, fs: FeatureSetId, k: usize, rule: FilterRule) -> Result<DesignMatrix> {
    build_design(cohort, fs, Task::Forecast(k).validate()?, rule)
}
