//! Label-availability filtering, linear-interpolation imputation and min-max scaling.

use std::collections::{BTreeSet, HashSet};

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::dataset::{DailyRecord, FeatureSetId, SubjectSeries};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// A label on day `d` is kept only if enough of the preceding days carry features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterRule {
    pub window_days: usize,
    pub min_present_days: usize,
}

impl Default for FilterRule {
    fn default() -> Self {
        Self {
            window_days: 7,
            min_present_days: 5,
        }
    }
}

impl FilterRule {
    pub fn new(window_days: usize, min_present_days: usize) -> Result<Self> {
        if min_present_days > window_days {
            return Err(Error::InvalidConfig(format!(
                "min_present_days ({min_present_days}) exceeds window_days ({window_days})"
            )));
        }
        Ok(Self {
            window_days,
            min_present_days,
        })
    }
}

/// Label dates whose prior window `[d - window_days, d - 1]` holds at least
/// `min_present_days` days with a complete feature vector in `view`.
pub fn filter_labels(series: &SubjectSeries, view: FeatureSetId, rule: FilterRule) -> BTreeSet<NaiveDate> {
    let available: HashSet<NaiveDate> = series
        .records
        .iter()
        .filter(|r| r.is_available_in(view))
        .map(|r| r.date)
        .collect();
    series
        .records
        .iter()
        .filter(|r| r.phq2.is_some())
        .map(|r| r.date)
        .filter(|&d| {
            let present = (1..=rule.window_days as u64)
                .filter_map(|back| d.checked_sub_days(Days::new(back)))
                .filter(|prev| available.contains(prev))
                .count();
            present >= rule.min_present_days
        })
        .collect()
}

/// Fills every calendar day between the first and last record of `series`,
/// restricted to the columns of `view`.
///
/// Each column is interpolated linearly in calendar days between its nearest
/// observed values; days before the first or after the last observation copy
/// that observation. Observed cells are never changed. Days absent from the
/// input are inserted without a label.
pub fn impute_linear(series: &SubjectSeries, view: FeatureSetId) -> Result<SubjectSeries> {
    let records: Vec<DailyRecord> = {
        let mut r: Vec<DailyRecord> = series.records.iter().map(|r| r.project(view)).collect();
        r.sort_by_key(|r| r.date);
        r
    };
    if !records.iter().any(DailyRecord::is_available) {
        return Err(Error::EmptySeries(series.subject_id.clone()));
    }
    let first = records[0].date;
    let last = records[records.len() - 1].date;
    let span = (last - first).num_days() as usize + 1;
    let n_esm = records[0].esm.len();
    let n_cols = n_esm + records[0].diary.len();

    let mut grid: Vec<Option<&DailyRecord>> = vec![None; span];
    for r in &records {
        grid[(r.date - first).num_days() as usize] = Some(r);
    }

    let mut filled = vec![vec![0.0; n_cols]; span];
    let mut observed: Vec<(usize, f64)> = Vec::with_capacity(span);
    for col in 0..n_cols {
        observed.clear();
        for (t, rec) in grid.iter().enumerate() {
            let cell = rec.and_then(|r| if col < n_esm { r.esm[col] } else { r.diary[col - n_esm] });
            if let Some(v) = cell {
                observed.push((t, v));
            }
        }
        // Any available day observes every column, so `observed` is non-empty.
        let mut next = 0;
        for (t, row) in filled.iter_mut().enumerate() {
            while next < observed.len() && observed[next].0 < t {
                next += 1;
            }
            row[col] = if next < observed.len() && observed[next].0 == t {
                observed[next].1
            } else if next == 0 {
                observed[0].1
            } else if next == observed.len() {
                observed[observed.len() - 1].1
            } else {
                let (t0, v0) = observed[next - 1];
                let (t1, v1) = observed[next];
                v0 + (v1 - v0) * (t - t0) as f64 / (t1 - t0) as f64
            };
        }
    }

    let records = filled
        .into_iter()
        .enumerate()
        .map(|(t, mut values)| {
            let diary = values.split_off(n_esm);
            DailyRecord {
                date: first + Days::new(t as u64),
                esm: values.into_iter().map(Some).collect(),
                diary: diary.into_iter().map(Some).collect(),
                phq2: grid[t].and_then(|r| r.phq2),
            }
        })
        .collect();
    Ok(SubjectSeries {
        subject_id: series.subject_id.clone(),
        records,
    })
}

/// Per-column extrema learned from training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Scaler {
    pub fn n_cols(&self) -> usize {
        self.min.len()
    }
}

pub fn fit_minmax(train: &Matrix) -> Result<Scaler> {
    if train.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let mut min = vec![f64::INFINITY; train.n_cols()];
    let mut max = vec![f64::NEG_INFINITY; train.n_cols()];
    for row in train.rows() {
        for (j, &v) in row.iter().enumerate() {
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    Ok(Scaler { min, max })
}

/// Maps `x` to `(x - min) / (max - min)` without clamping; constant columns map to 0.
pub fn apply_minmax(scaler: &Scaler, m: &Matrix) -> Result<Matrix> {
    m.check_width(scaler.n_cols())?;
    let mut out = m.clone();
    for i in 0..out.n_rows() {
        for (j, v) in out.row_mut(i).iter_mut().enumerate() {
            let range = scaler.max[j] - scaler.min[j];
            *v = if range > 0.0 { (*v - scaler.min[j]) / range } else { 0.0 };
        }
    }
    Ok(out)
}
