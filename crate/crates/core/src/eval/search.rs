//! Inner cross-validation over a model's hyperparameter grid.

use rand::seq::SliceRandom;

use super::stats::mae;
use crate::error::{Error, Result};
use crate::features::DesignMatrix;
use crate::models::{fit, HyperGrid, HyperParams, ModelKind};
use crate::preprocess::{apply_minmax, fit_minmax};
use crate::rng::{derive_seed, stream};

pub const INNER_FOLDS: usize = 3;

/// Row indices of each inner validation fold: a seeded shuffle cut into
/// contiguous pieces. Rows are not grouped by subject.
pub fn inner_folds(n_rows: usize, n_folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n_rows).collect();
    order.shuffle(&mut stream(seed, &[0]));
    (0..n_folds)
        .map(|f| order[f * n_rows / n_folds..(f + 1) * n_rows / n_folds].to_vec())
        .collect()
}

/// Seed for the model fitted on inner fold `fold` (or on the whole training set for `None`).
pub fn model_seed(seed: u64, fold: Option<usize>) -> u64 {
    derive_seed(seed, &[1, fold.map_or(0, |f| f as u64 + 1)])
}

/// Mean validation MAE of every candidate, in candidate order.
///
/// Candidates that differ only in ensemble size share one fit of the largest
/// ensemble and are scored on its prefixes; since tree `t` always uses the same
/// random stream, this equals fitting each size separately.
pub fn grid_scores(train: &DesignMatrix, candidates: &[HyperParams], n_folds: usize, seed: u64) -> Result<Vec<f64>> {
    let n = train.n_rows();
    if n_folds < 2 || n < n_folds {
        return Err(Error::TooFewRows {
            needed: n_folds.max(2),
            got: n,
        });
    }
    let y = train.targets();
    let folds = inner_folds(n, n_folds, seed);
    let mut scores = vec![0.0; candidates.len()];
    let mut in_val = vec![false; n];
    for (f, val) in folds.iter().enumerate() {
        in_val.iter_mut().for_each(|v| *v = false);
        for &i in val {
            in_val[i] = true;
        }
        // Canonical (ascending) row order for fitting.
        let fit_rows: Vec<usize> = (0..n).filter(|&i| !in_val[i]).collect();
        let mut val_rows = val.clone();
        val_rows.sort_unstable();
        let x_fit = train.x.select_rows(&fit_rows);
        let scaler = fit_minmax(&x_fit)?;
        let x_fit = apply_minmax(&scaler, &x_fit)?;
        let x_val = apply_minmax(&scaler, &train.x.select_rows(&val_rows))?;
        let y_fit: Vec<f64> = fit_rows.iter().map(|&i| y[i]).collect();
        let y_val: Vec<f64> = val_rows.iter().map(|&i| y[i]).collect();

        let mut done = vec![false; candidates.len()];
        for c in 0..candidates.len() {
            if done[c] {
                continue;
            }
            let family: Vec<usize> = match candidates[c].ensemble_size() {
                Some(_) => {
                    let key = candidates[c].with_ensemble_size(0);
                    (c..candidates.len())
                        .filter(|&o| candidates[o].ensemble_size().is_some() && candidates[o].with_ensemble_size(0) == key)
                        .collect()
                }
                None => vec![c],
            };
            let largest = family.iter().filter_map(|&o| candidates[o].ensemble_size()).max();
            let params = largest.map_or(candidates[c], |m| candidates[c].with_ensemble_size(m));
            let model = fit(&params, &x_fit, &y_fit, model_seed(seed, Some(f)))?;
            for &o in &family {
                let pred = match candidates[o].ensemble_size() {
                    Some(k) => model.predict_prefix(&x_val, k)?,
                    None => model.predict(&x_val)?,
                };
                scores[o] += mae(&pred, &y_val)? / n_folds as f64;
                done[o] = true;
            }
        }
    }
    Ok(scores)
}

/// Best grid point by mean inner-fold MAE; ties go to the earliest candidate.
pub fn nested_grid_search(
    train: &DesignMatrix,
    kind: ModelKind,
    grid: &HyperGrid,
    n_folds: usize,
    seed: u64,
) -> Result<HyperParams> {
    if kind == ModelKind::Baseline {
        return Ok(HyperParams::Baseline);
    }
    if train.n_rows() < n_folds {
        return Err(Error::TooFewRows {
            needed: n_folds,
            got: train.n_rows(),
        });
    }
    let candidates = grid.candidates(kind);
    match candidates.len() {
        0 => return Err(Error::InvalidConfig(format!("empty {kind} grid"))),
        1 => return Ok(candidates[0]),
        _ => {}
    }
    let scores = grid_scores(train, &candidates, n_folds, seed)?;
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }
    Ok(candidates[best])
}
