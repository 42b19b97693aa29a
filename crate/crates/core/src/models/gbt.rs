//! First-order gradient boosting with squared-error loss and per-tree column subsampling.

use serde::{Deserialize, Serialize};

use super::tree::{grow, sample_columns, ColumnIndex, ColumnSampling, GrowSpec, RegressionTree};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::stream;

pub const DEFAULT_LEARNING_RATE: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub colsample: f64,
    pub max_depth: usize,
    pub n_trees: usize,
    pub learning_rate: f64,
}

impl GbtParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.colsample > 0.0 && self.colsample <= 1.0) {
            return Err(Error::InvalidHyperparameter(format!(
                "colsample {} outside (0, 1]",
                self.colsample
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidHyperparameter(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        Ok(())
    }

    /// Columns drawn per tree: `ceil(colsample * p)`, at least one.
    pub fn columns_per_tree(&self, p: usize) -> usize {
        // Guard against 0.6 * 5 = 3.0000000000000004 rounding up to 4.
        let k = (self.colsample * p as f64 - 1e-9).ceil() as usize;
        k.clamp(1, p.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbtModel {
    n_features: usize,
    base_score: f64,
    learning_rate: f64,
    trees: Vec<RegressionTree>,
}

impl GbtModel {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Prediction using only the first `n_trees` boosting rounds.
    pub fn predict_row_prefix(&self, row: &[f64], n_trees: usize) -> f64 {
        let boost: f64 = self.trees[..n_trees.min(self.trees.len())]
            .iter()
            .map(|t| t.predict_row(row))
            .sum();
        self.base_score + self.learning_rate * boost
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.predict_row_prefix(row, self.trees.len())
    }
}

/// Round `t` draws its column subset from a stream keyed by `(seed, t)`, so a
/// model with fewer rounds is an exact prefix of one with more.
pub fn fit_gbt(x: &Matrix, y: &[f64], params: &GbtParams, seed: u64) -> Result<GbtModel> {
    params.validate()?;
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch(x.n_rows(), y.len()));
    }
    if y.len() < 2 {
        return Err(Error::DegenerateData(format!("boosting needs at least 2 rows, got {}", y.len())));
    }
    let p = x.n_cols();
    let index = ColumnIndex::new(x);
    let base_score = y.iter().sum::<f64>() / y.len() as f64;
    let mut pred = vec![base_score; y.len()];
    let mut residual = vec![0.0; y.len()];
    let k = params.columns_per_tree(p);
    let mut trees = Vec::with_capacity(params.n_trees);
    for t in 0..params.n_trees {
        for i in 0..y.len() {
            residual[i] = y[i] - pred[i];
        }
        let mut rng = stream(seed, &[t as u64]);
        let cols = sample_columns(p, k, &mut rng);
        let spec = GrowSpec {
            max_depth: Some(params.max_depth),
            sampling: ColumnSampling::Fixed(&cols),
        };
        let tree = grow(&index, &residual, None, &spec, &mut rng);
        for (i, row) in x.rows().enumerate() {
            pred[i] += params.learning_rate * tree.predict_row(row);
        }
        trees.push(tree);
    }
    Ok(GbtModel {
        n_features: p,
        base_score,
        learning_rate: params.learning_rate,
        trees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(colsample: f64, max_depth: usize, n_trees: usize) -> GbtParams {
        GbtParams {
            colsample,
            max_depth,
            n_trees,
            learning_rate: DEFAULT_LEARNING_RATE,
        }
    }

    fn toy(n: usize, p: usize, seed: u64) -> (Matrix, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.gen()).collect()).collect();
        let y = rows
            .iter()
            .map(|r| (r[0] * 8.0 + r[p - 1] * 4.0 + rng.gen::<f64>()).round())
            .collect();
        (Matrix::from_rows(&rows), y)
    }

    #[test]
    fn columns_per_tree_rounds_up() {
        assert_eq!(params(0.2, 3, 1).columns_per_tree(24), 5);
        assert_eq!(params(0.6, 3, 1).columns_per_tree(5), 3);
        assert_eq!(params(0.2, 3, 1).columns_per_tree(1), 1);
        assert_eq!(params(0.8, 3, 1).columns_per_tree(11), 9);
    }

    #[test]
    fn hand_traced_stump() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]);
        let p = GbtParams {
            learning_rate: 1.0,
            ..params(1.0, 1, 1)
        };
        let m = fit_gbt(&x, &[0.0, 1.0], &p, 0).unwrap();
        // Base 0.5, residuals [-0.5, 0.5], stump at 0.5 reproduces them exactly.
        assert_eq!(m.predict_row(&[0.0]), 0.0);
        assert_eq!(m.predict_row(&[1.0]), 1.0);
    }

    #[test]
    fn constant_target() {
        let (x, _) = toy(30, 4, 1);
        let y = vec![4.0; 30];
        let m = fit_gbt(&x, &y, &params(0.4, 5, 100), 3).unwrap();
        assert!(x.rows().all(|r| m.predict_row(r) == 4.0));
    }

    #[test]
    fn deterministic_and_prefix_consistent() {
        let (x, y) = toy(80, 6, 2);
        let a = fit_gbt(&x, &y, &params(0.6, 3, 100), 9).unwrap();
        let b = fit_gbt(&x, &y, &params(0.6, 3, 100), 9).unwrap();
        assert_eq!(a, b);
        let short = fit_gbt(&x, &y, &params(0.6, 3, 10), 9).unwrap();
        for r in x.rows() {
            assert_eq!(short.predict_row(r), a.predict_row_prefix(r, 10));
        }
    }

    #[test]
    fn training_mae_non_increasing_in_rounds() {
        let (x, y) = toy(120, 5, 4);
        let m = fit_gbt(&x, &y, &params(0.8, 3, 100), 1).unwrap();
        let mae = |k: usize| {
            x.rows().zip(&y).map(|(r, t)| (m.predict_row_prefix(r, k) - t).abs()).sum::<f64>() / y.len() as f64
        };
        let curve: Vec<f64> = [0, 1, 2, 5, 10, 20, 50, 100].iter().map(|&k| mae(k)).collect();
        for w in curve.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{curve:?}");
        }
    }

    #[test]
    fn rejects_degenerate_input() {
        let x = Matrix::from_rows(&[[1.0]]);
        assert!(matches!(fit_gbt(&x, &[1.0], &params(0.2, 3, 10), 0), Err(Error::DegenerateData(_))));
        assert!(fit_gbt(&x, &[1.0], &params(0.0, 3, 10), 0).is_err());
    }
}
