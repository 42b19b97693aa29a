//! Regressors behind one fit/predict contract, their hyperparameter grids and
//! the rolling-mean baseline.

pub mod baseline;
pub mod gbt;
pub mod mlp;
pub mod rf;
pub mod svr;
pub(crate) mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use baseline::baseline_rolling_mean;
pub use gbt::{fit_gbt, GbtModel, GbtParams};
pub use mlp::{fit_mlp, MlpModel, MlpSpec};
pub use rf::{fit_rf, RfModel, RfParams};
pub use svr::{fit_svr, Kernel, SvrModel, SvrParams};
pub use tree::RegressionTree;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gbt,
    Rf,
    Svr,
    Mlp,
    Baseline,
}

impl ModelKind {
    pub const LEARNERS: [ModelKind; 4] = [ModelKind::Gbt, ModelKind::Svr, ModelKind::Rf, ModelKind::Mlp];
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Baseline,
        ModelKind::Gbt,
        ModelKind::Svr,
        ModelKind::Rf,
        ModelKind::Mlp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Gbt => "gbt",
            ModelKind::Rf => "rf",
            ModelKind::Svr => "svr",
            ModelKind::Mlp => "mlp",
            ModelKind::Baseline => "baseline",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gbt" | "xgboost" => Ok(ModelKind::Gbt),
            "rf" | "random-forest" => Ok(ModelKind::Rf),
            "svr" | "svm" => Ok(ModelKind::Svr),
            "mlp" => Ok(ModelKind::Mlp),
            "baseline" => Ok(ModelKind::Baseline),
            other => Err(format!("unknown model {other:?}")),
        }
    }
}

/// One point of a model's hyperparameter space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum HyperParams {
    Gbt(GbtParams),
    Rf(RfParams),
    Svr(SvrParams),
    Mlp(MlpSpec),
    Baseline,
}

impl HyperParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            HyperParams::Gbt(_) => ModelKind::Gbt,
            HyperParams::Rf(_) => ModelKind::Rf,
            HyperParams::Svr(_) => ModelKind::Svr,
            HyperParams::Mlp(_) => ModelKind::Mlp,
            HyperParams::Baseline => ModelKind::Baseline,
        }
    }

    /// Ensemble size for models whose smaller ensembles are prefixes of larger ones.
    pub fn ensemble_size(&self) -> Option<usize> {
        match self {
            HyperParams::Gbt(p) => Some(p.n_trees),
            HyperParams::Rf(p) => Some(p.n_trees),
            _ => None,
        }
    }

    /// The same point with a different ensemble size.
    pub fn with_ensemble_size(&self, n_trees: usize) -> HyperParams {
        match *self {
            HyperParams::Gbt(p) => HyperParams::Gbt(GbtParams { n_trees, ..p }),
            HyperParams::Rf(p) => HyperParams::Rf(RfParams { n_trees, ..p }),
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtGrid {
    pub colsample: Vec<f64>,
    pub max_depth: Vec<usize>,
    pub n_trees: Vec<usize>,
    pub learning_rate: f64,
}

impl Default for GbtGrid {
    fn default() -> Self {
        Self {
            colsample: vec![0.2, 0.4, 0.6, 0.8],
            max_depth: vec![3, 4, 5],
            n_trees: vec![10, 100],
            learning_rate: gbt::DEFAULT_LEARNING_RATE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvrGrid {
    pub kernel: Vec<Kernel>,
    pub c: Vec<f64>,
    pub epsilon: f64,
    pub tolerance: f64,
}

impl Default for SvrGrid {
    fn default() -> Self {
        Self {
            kernel: vec![Kernel::Rbf, Kernel::Linear],
            c: vec![0.0001, 0.001, 0.1, 1.0, 3.0, 5.0, 10.0],
            epsilon: svr::DEFAULT_EPSILON,
            tolerance: svr::DEFAULT_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfGrid {
    pub n_trees: Vec<usize>,
    pub max_split_features: Vec<usize>,
}

impl Default for RfGrid {
    fn default() -> Self {
        Self {
            n_trees: vec![10, 100, 500, 1000],
            max_split_features: vec![2, 3, 4, 5, 6],
        }
    }
}

/// Search spaces for every learner; the MLP has a single fixed configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperGrid {
    pub gbt: GbtGrid,
    pub svr: SvrGrid,
    pub rf: RfGrid,
    pub mlp: MlpSpec,
}

impl HyperGrid {
    /// Grid points in canonical order (first listed axis outermost).
    pub fn candidates(&self, kind: ModelKind) -> Vec<HyperParams> {
        let mut out = Vec::new();
        match kind {
            ModelKind::Gbt => {
                for &colsample in &self.gbt.colsample {
                    for &max_depth in &self.gbt.max_depth {
                        for &n_trees in &self.gbt.n_trees {
                            out.push(HyperParams::Gbt(GbtParams {
                                colsample,
                                max_depth,
                                n_trees,
                                learning_rate: self.gbt.learning_rate,
                            }));
                        }
                    }
                }
            }
            ModelKind::Svr => {
                for &kernel in &self.svr.kernel {
                    for &c in &self.svr.c {
                        out.push(HyperParams::Svr(SvrParams {
                            kernel,
                            c,
                            epsilon: self.svr.epsilon,
                            tolerance: self.svr.tolerance,
                        }));
                    }
                }
            }
            ModelKind::Rf => {
                for &n_trees in &self.rf.n_trees {
                    for &m in &self.rf.max_split_features {
                        out.push(HyperParams::Rf(RfParams::new(n_trees, m)));
                    }
                }
            }
            ModelKind::Mlp => out.push(HyperParams::Mlp(self.mlp)),
            ModelKind::Baseline => out.push(HyperParams::Baseline),
        }
        out
    }
}

/// A fitted learner.
#[derive(Debug, Clone, PartialEq)]
pub enum Regressor {
    Gbt(GbtModel),
    Rf(RfModel),
    Svr(SvrModel),
    Mlp(MlpModel),
}

impl Regressor {
    pub fn kind(&self) -> ModelKind {
        match self {
            Regressor::Gbt(_) => ModelKind::Gbt,
            Regressor::Rf(_) => ModelKind::Rf,
            Regressor::Svr(_) => ModelKind::Svr,
            Regressor::Mlp(_) => ModelKind::Mlp,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Regressor::Gbt(m) => m.n_features(),
            Regressor::Rf(m) => m.n_features(),
            Regressor::Svr(m) => m.n_features(),
            Regressor::Mlp(m) => m.n_features(),
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        x.check_width(self.n_features())?;
        Ok(match self {
            Regressor::Gbt(m) => x.rows().map(|r| m.predict_row(r)).collect(),
            Regressor::Rf(m) => x.rows().map(|r| m.predict_row(r)).collect(),
            Regressor::Svr(m) => x.rows().map(|r| m.predict_row(r)).collect(),
            Regressor::Mlp(m) => x.rows().map(|r| m.predict_row(r)).collect(),
        })
    }

    /// Predictions of the first `n_trees` members of a tree ensemble; other
    /// models ignore `n_trees`.
    pub fn predict_prefix(&self, x: &Matrix, n_trees: usize) -> Result<Vec<f64>> {
        x.check_width(self.n_features())?;
        match self {
            Regressor::Gbt(m) => Ok(x.rows().map(|r| m.predict_row_prefix(r, n_trees)).collect()),
            Regressor::Rf(m) => Ok(x.rows().map(|r| m.predict_row_prefix(r, n_trees)).collect()),
            _ => self.predict(x),
        }
    }
}

/// Fits the learner described by `params`. The baseline is not a row-wise model.
pub fn fit(params: &HyperParams, x: &Matrix, y: &[f64], seed: u64) -> Result<Regressor> {
    match params {
        HyperParams::Gbt(p) => fit_gbt(x, y, p, seed).map(Regressor::Gbt),
        HyperParams::Rf(p) => fit_rf(x, y, p, seed).map(Regressor::Rf),
        HyperParams::Svr(p) => fit_svr(x, y, p).map(Regressor::Svr),
        HyperParams::Mlp(p) => fit_mlp(x, y, p, seed).map(Regressor::Mlp),
        HyperParams::Baseline => Err(Error::InvalidHyperparameter(
            "the rolling-mean baseline predicts from label history, not features".into(),
        )),
    }
}
