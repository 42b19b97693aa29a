//! Leave-one-subject-out evaluation, lag sweeps and the statistics behind them.

pub mod search;
pub mod stats;

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use search::{grid_scores, inner_folds, nested_grid_search, INNER_FOLDS};
pub use stats::{mae, paired_ttest, sample_sd, student_t_cdf, TTestResult};

use crate::dataset::{Cohort, FeatureSetId};
use crate::error::{Error, Result};
use crate::features::{subject_rows, DesignMatrix, RowKey, Task};
use crate::matrix::Matrix;
use crate::models::{baseline_rolling_mean, fit, HyperGrid, HyperParams, ModelKind};
use crate::preprocess::{apply_minmax, fit_minmax, FilterRule};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub subject_id: String,
    pub date: NaiveDate,
    pub y_true: f64,
    pub y_pred: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedSubject {
    pub subject_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub model: ModelKind,
    pub per_subject_mae: BTreeMap<String, f64>,
    /// MAE over all test predictions pooled across folds.
    pub pooled_mae: f64,
    /// Unweighted mean of the per-subject MAEs.
    pub mean_subject_mae: f64,
    pub per_fold_chosen_params: BTreeMap<String, HyperParams>,
    /// Test predictions, grouped by subject in cohort order, dates ascending.
    pub predictions: Vec<Prediction>,
    pub skipped: Vec<SkippedSubject>,
}

/// What a fold hands to each pipeline stage, reported to an optional observer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Rows the min-max scaler is fitted on.
    Scaling,
    /// Rows given to the inner grid search (unscaled).
    GridSearch,
    /// Rows the final model is fitted on (scaled).
    Fit,
    /// The held-out subject's rows (scaled).
    Test,
}

#[derive(Debug)]
pub struct FoldEvent<'a> {
    pub test_subject: &'a str,
    pub model: Option<ModelKind>,
    pub stage: Stage,
    pub rows: &'a [RowKey],
    pub x: &'a Matrix,
}

pub type Observer<'a> = &'a (dyn Fn(&FoldEvent<'_>) + Sync);

/// Stable 64-bit FNV-1a, used to key a fold's random streams by its subject.
fn subject_tag(id: &str) -> u64 {
    id.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Seed of the fold holding out `subject_id`. Keyed by the subject rather than
/// its position so that adding or dropping other subjects leaves it unchanged.
pub fn fold_seed(seed: u64, subject_id: &str) -> u64 {
    derive_seed(seed, &[subject_tag(subject_id)])
}

/// Per-subject design blocks plus the subjects that contribute no rows.
pub fn evaluable_blocks(
    cohort: &Cohort,
    fs: FeatureSetId,
    task: Task,
    rule: FilterRule,
) -> Result<(Vec<DesignMatrix>, Vec<SkippedSubject>)> {
    let mut blocks = Vec::new();
    let mut skipped = Vec::new();
    for s in &cohort.subjects {
        let reason = match subject_rows(s, fs, task, rule) {
            Ok(Some(b)) => {
                blocks.push(b);
                continue;
            }
            Ok(None) | Err(Error::NoRows) => "no retained labels".to_string(),
            Err(Error::EmptySeries(msg)) => msg,
            Err(e) => return Err(e),
        };
        log::warn!("subject {} skipped: {reason}", s.subject_id);
        skipped.push(SkippedSubject {
            subject_id: s.subject_id.clone(),
            reason,
        });
    }
    Ok((blocks, skipped))
}

struct FoldOutcome {
    chosen: HyperParams,
    predictions: Vec<f64>,
}

pub fn loso_evaluate(
    cohort: &Cohort,
    fs: FeatureSetId,
    task: Task,
    kind: ModelKind,
    grid: &HyperGrid,
    rule: FilterRule,
    seed: u64,
) -> Result<EvalResult> {
    let mut out = loso_evaluate_models(cohort, fs, task, &[kind], grid, rule, seed, None)?;
    Ok(out.remove(0))
}

/// Runs several model kinds over identical folds; one result per kind, in order.
#[allow(clippy::too_many_arguments)]
pub fn loso_evaluate_models(
    cohort: &Cohort,
    fs: FeatureSetId,
    task: Task,
    kinds: &[ModelKind],
    grid: &HyperGrid,
    rule: FilterRule,
    seed: u64,
    observer: Option<Observer<'_>>,
) -> Result<Vec<EvalResult>> {
    let task = task.validate()?;
    let (blocks, skipped) = evaluable_blocks(cohort, fs, task, rule)?;
    if blocks.len() < 2 {
        return Err(Error::InsufficientSubjects(blocks.len()));
    }
    let outcomes: Vec<Result<Vec<FoldOutcome>>> = (0..blocks.len())
        .into_par_iter()
        .map(|held_out| run_fold(&blocks, held_out, kinds, grid, seed, observer))
        .collect();

    let mut results: Vec<EvalResult> = kinds
        .iter()
        .map(|&model| EvalResult {
            model,
            per_subject_mae: BTreeMap::new(),
            pooled_mae: 0.0,
            mean_subject_mae: 0.0,
            per_fold_chosen_params: BTreeMap::new(),
            predictions: Vec::new(),
            skipped: skipped.clone(),
        })
        .collect();
    for (block, fold) in blocks.iter().zip(outcomes) {
        let subject = &block.provenance[0].subject_id;
        for (res, outcome) in results.iter_mut().zip(fold?) {
            let truth = block.targets();
            res.per_subject_mae.insert(subject.clone(), mae(&outcome.predictions, &truth)?);
            res.per_fold_chosen_params.insert(subject.clone(), outcome.chosen);
            res.predictions.extend(block.provenance.iter().zip(truth).zip(outcome.predictions).map(
                |((key, y_true), y_pred)| Prediction {
                    subject_id: key.subject_id.clone(),
                    date: key.date,
                    y_true,
                    y_pred,
                },
            ));
        }
    }
    for res in &mut results {
        let (p, t): (Vec<f64>, Vec<f64>) = res.predictions.iter().map(|p| (p.y_pred, p.y_true)).unzip();
        res.pooled_mae = mae(&p, &t)?;
        res.mean_subject_mae = res.per_subject_mae.values().sum::<f64>() / res.per_subject_mae.len() as f64;
    }
    Ok(results)
}

fn run_fold(
    blocks: &[DesignMatrix],
    held_out: usize,
    kinds: &[ModelKind],
    grid: &HyperGrid,
    seed: u64,
    observer: Option<Observer<'_>>,
) -> Result<Vec<FoldOutcome>> {
    let test = &blocks[held_out];
    let subject = test.provenance[0].subject_id.as_str();
    let train = DesignMatrix::concat(blocks.iter().enumerate().filter(|(i, _)| *i != held_out).map(|(_, b)| b))?;
    let seed = fold_seed(seed, subject);
    let notify = |model: Option<ModelKind>, stage: Stage, rows: &[RowKey], x: &Matrix| {
        if let Some(obs) = observer {
            obs(&FoldEvent {
                test_subject: subject,
                model,
                stage,
                rows,
                x,
            });
        }
    };

    notify(None, Stage::Scaling, &train.provenance, &train.x);
    let scaler = fit_minmax(&train.x)?;
    let x_train = apply_minmax(&scaler, &train.x)?;
    let x_test = apply_minmax(&scaler, &test.x)?;
    notify(None, Stage::Test, &test.provenance, &x_test);
    let y_train = train.targets();
    let y_test = test.targets();

    let mut out = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        if kind == ModelKind::Baseline {
            let global_mean = y_train.iter().sum::<f64>() / y_train.len() as f64;
            out.push(FoldOutcome {
                chosen: HyperParams::Baseline,
                predictions: baseline_rolling_mean(&y_test, global_mean),
            });
            continue;
        }
        notify(Some(kind), Stage::GridSearch, &train.provenance, &train.x);
        let chosen = nested_grid_search(&train, kind, grid, INNER_FOLDS, seed)?;
        notify(Some(kind), Stage::Fit, &train.provenance, &x_train);
        let model = fit(&chosen, &x_train, &y_train, search::model_seed(seed, None))?;
        out.push(FoldOutcome {
            chosen,
            predictions: model.predict(&x_test)?,
        });
    }
    log::info!("fold {subject}: {} training rows, {} test rows", train.n_rows(), test.n_rows());
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub pooled_mae: f64,
    pub mean_subject_mae: f64,
    /// Sample standard deviation of the per-subject MAEs.
    pub mae_stddev_over_subjects: f64,
    pub per_subject_mae: BTreeMap<String, f64>,
}

/// Reference lag versus one other lag, over subjects evaluable at both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagComparison {
    pub reference_k: usize,
    pub k: usize,
    pub n_pairs: usize,
    /// `None` when fewer than two subjects are shared.
    pub ttest: Option<TTestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagSweep {
    pub model: ModelKind,
    pub rows: Vec<SweepRow>,
    /// Lag with the lowest pooled MAE (first on ties).
    pub best_k: usize,
    pub comparisons: Vec<LagComparison>,
    pub results: Vec<EvalResult>,
}

/// LOSO evaluation of the forecast task at each lag in `ks`; the first lag is
/// the reference for the paired t-tests.
#[allow(clippy::too_many_arguments)]
pub fn lag_sweep(
    cohort: &Cohort,
    fs: FeatureSetId,
    kind: ModelKind,
    ks: &[usize],
    grid: &HyperGrid,
    rule: FilterRule,
    seed: u64,
) -> Result<LagSweep> {
    if ks.is_empty() {
        return Err(Error::InvalidConfig("empty lag range".into()));
    }
    for &k in ks {
        Task::Forecast(k).validate()?;
    }
    let results = ks
        .iter()
        .map(|&k| {
            log::info!("lag sweep: {kind} at k={k}");
            loso_evaluate(cohort, fs, Task::Forecast(k), kind, grid, rule, seed)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<SweepRow> = ks
        .iter()
        .zip(&results)
        .map(|(&k, r)| SweepRow {
            k,
            pooled_mae: r.pooled_mae,
            mean_subject_mae: r.mean_subject_mae,
            mae_stddev_over_subjects: sample_sd(&r.per_subject_mae.values().copied().collect::<Vec<_>>()),
            per_subject_mae: r.per_subject_mae.clone(),
        })
        .collect();
    let best_k = rows
        .iter()
        .fold(&rows[0], |best, r| if r.pooled_mae < best.pooled_mae { r } else { best })
        .k;
    let reference = &rows[0];
    let comparisons = rows[1..]
        .iter()
        .map(|row| {
            let shared: BTreeSet<&String> = reference
                .per_subject_mae
                .keys()
                .filter(|s| row.per_subject_mae.contains_key(*s))
                .collect();
            let a: Vec<f64> = shared.iter().map(|s| reference.per_subject_mae[*s]).collect();
            let b: Vec<f64> = shared.iter().map(|s| row.per_subject_mae[*s]).collect();
            Ok(LagComparison {
                reference_k: reference.k,
                k: row.k,
                n_pairs: shared.len(),
                ttest: match paired_ttest(&a, &b) {
                    Ok(t) => Some(t),
                    Err(Error::TooFewPairs(_)) => None,
                    Err(e) => return Err(e),
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LagSweep {
        model: kind,
        rows,
        best_k,
        comparisons,
        results,
    })
}
