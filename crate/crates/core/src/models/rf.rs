//! Random forest of fully grown regression trees on bootstrap samples.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{grow, ColumnIndex, ColumnSampling, GrowSpec, RegressionTree};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RfParams {
    pub n_trees: usize,
    pub max_split_features: usize,
    /// Draw a bootstrap sample of size n per tree; when false every tree sees all rows once.
    #[serde(default = "default_bootstrap")]
    pub bootstrap: bool,
}

fn default_bootstrap() -> bool {
    true
}

impl RfParams {
    pub fn new(n_trees: usize, max_split_features: usize) -> Self {
        Self {
            n_trees,
            max_split_features,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfModel {
    n_features: usize,
    trees: Vec<RegressionTree>,
}

impl RfModel {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    /// Mean over the first `n_trees` trees.
    pub fn predict_row_prefix(&self, row: &[f64], n_trees: usize) -> f64 {
        let k = n_trees.min(self.trees.len());
        self.trees[..k].iter().map(|t| t.predict_row(row)).sum::<f64>() / k as f64
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.predict_row_prefix(row, self.trees.len())
    }
}

/// Per-tree bootstrap multiplicities, drawn from the tree's own stream.
pub fn bootstrap_counts<R: Rng>(n: usize, rng: &mut R) -> Vec<u32> {
    let mut counts = vec![0u32; n];
    for _ in 0..n {
        counts[rng.gen_range(0..n)] += 1;
    }
    counts
}

/// Tree `t` uses the stream keyed by `(seed, t)`, so smaller forests are exact prefixes of larger ones.
pub fn fit_rf(x: &Matrix, y: &[f64], params: &RfParams, seed: u64) -> Result<RfModel> {
    let p = x.n_cols();
    if params.max_split_features == 0 || params.max_split_features > p {
        return Err(Error::InvalidMaxFeatures {
            requested: params.max_split_features,
            available: p,
        });
    }
    if params.n_trees == 0 {
        return Err(Error::InvalidHyperparameter("random forest needs at least one tree".into()));
    }
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch(x.n_rows(), y.len()));
    }
    if y.is_empty() {
        return Err(Error::DegenerateData("random forest needs at least one row".into()));
    }
    let index = ColumnIndex::new(x);
    let spec = GrowSpec {
        max_depth: None,
        sampling: ColumnSampling::PerNode {
            per_node: params.max_split_features,
        },
    };
    let trees = (0..params.n_trees)
        .map(|t| {
            let mut rng = stream(seed, &[t as u64]);
            if params.bootstrap {
                let counts = bootstrap_counts(y.len(), &mut rng);
                grow(&index, y, Some(&counts), &spec, &mut rng)
            } else {
                grow(&index, y, None, &spec, &mut rng)
            }
        })
        .collect();
    Ok(RfModel { n_features: p, trees })
}
