//! PHQ-2 prediction and forecasting from daily diary and ESM self-reports.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod matrix;
pub mod models;
pub mod preprocess;
pub mod report;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
