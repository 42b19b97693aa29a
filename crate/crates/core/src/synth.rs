//! Seeded synthetic cohorts driven by a per-subject trait plus an AR(1) daily state.
//!
//! Every feature is an affine function of the latent state with independent
//! Gaussian noise, alternating in sign so that some items rise with the state
//! and others fall. The PHQ-2 label is a rounded, clamped affine function of
//! the same state. Whole feature blocks are deleted per day: either both
//! blocks (and the label, as if the diary was skipped) or the ESM block
//! alone, in a 14:3 ratio, so ESM and Combined views share a missing rate
//! slightly above the diary view's and the mean over the three views equals
//! `missing_rate` in expectation.

use chrono::{Days, NaiveDate};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Cohort, DailyRecord, Phq2Score, Schema, SubjectSeries, PHQ2_MAX};
use crate::error::{Error, Result};
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_subjects: usize,
    pub n_days: usize,
    pub missing_rate: f64,
    pub ar_coefficient: f64,
    /// Standard deviation of per-feature measurement noise.
    pub noise_sd: f64,
    /// Standard deviation of the stable per-subject trait.
    pub trait_sd: f64,
    pub label_intercept: f64,
    pub label_slope: f64,
    pub label_noise_sd: f64,
    pub start_date: NaiveDate,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_subjects: 48,
            n_days: 90,
            missing_rate: 0.16,
            ar_coefficient: 0.8,
            noise_sd: 0.5,
            trait_sd: 1.0,
            label_intercept: 5.0,
            label_slope: 2.0,
            label_noise_sd: 1.2,
            start_date: NaiveDate::from_ymd_opt(2021, 1, 4).expect("valid date"),
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n_subjects < 2 {
            return bad("n_subjects must be at least 2");
        }
        if self.n_days < 8 {
            return bad("n_days must be at least 8");
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            return bad("missing_rate must lie in [0, 1)");
        }
        if !(self.ar_coefficient > 0.0 && self.ar_coefficient < 1.0) {
            return bad("ar_coefficient must lie in (0, 1)");
        }
        if !(self.noise_sd > 0.0 && self.noise_sd.is_finite()) {
            return bad("noise_sd must be positive");
        }
        for (name, v) in [
            ("trait_sd", self.trait_sd),
            ("label_noise_sd", self.label_noise_sd),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be non-negative")));
            }
        }
        if !self.label_intercept.is_finite() || !self.label_slope.is_finite() {
            return bad("label coefficients must be finite");
        }
        Ok(())
    }

    /// Per-day probabilities of (both blocks missing, ESM block only missing).
    fn block_missing_probs(&self) -> (f64, f64) {
        let r = self.missing_rate;
        let total = 17.0 / 16.0 * r;
        if total <= 1.0 {
            (14.0 / 17.0 * total, 3.0 / 17.0 * total)
        } else {
            // Every day loses its ESM block; raise the joint share to keep the mean at r.
            let both = 3.0 * r - 2.0;
            (both, 1.0 - both)
        }
    }
}

struct Loading {
    intercept: f64,
    slope: f64,
}

fn feature_loadings(cfg: &SynthConfig, n: usize) -> Vec<Loading> {
    let mut rng = stream(cfg.seed, &[0]);
    (0..n)
        .map(|j| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            Loading {
                intercept: rng.gen_range(2.0..5.0),
                slope: sign * rng.gen_range(0.6..1.4),
            }
        })
        .collect()
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

pub fn generate_cohort(cfg: &SynthConfig) -> Result<Cohort> {
    cfg.validate()?;
    let schema = Schema::default();
    let n_esm = schema.esm.len();
    let loadings = feature_loadings(cfg, schema.n_features());
    let (p_both, p_esm_only) = cfg.block_missing_probs();
    let innovation_sd = (1.0 - cfg.ar_coefficient * cfg.ar_coefficient).sqrt();
    let id_width = cfg.n_subjects.to_string().len().max(2);

    let subjects = (0..cfg.n_subjects)
        .map(|i| {
            let mut rng = stream(cfg.seed, &[1, i as u64]);
            let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
            let trait_level = cfg.trait_sd * normal();
            let mut z = normal();
            let mut days = Vec::with_capacity(cfg.n_days);
            for t in 0..cfg.n_days {
                if t > 0 {
                    z = cfg.ar_coefficient * z + innovation_sd * normal();
                }
                let state = trait_level + z;
                let features: Vec<f64> = loadings
                    .iter()
                    .map(|l| round3(l.intercept + l.slope * state + cfg.noise_sd * normal()))
                    .collect();
                let raw = cfg.label_intercept + cfg.label_slope * state + cfg.label_noise_sd * normal();
                let label = raw.round().clamp(0.0, f64::from(PHQ2_MAX)) as u8;
                days.push((features, label));
            }
            let records = days
                .into_iter()
                .enumerate()
                .map(|(t, (features, label))| {
                    let u: f64 = rng.gen();
                    let drop_both = u < p_both;
                    let drop_esm = u < p_both + p_esm_only;
                    let mut esm: Vec<Option<f64>> = features.into_iter().map(Some).collect();
                    let mut diary = esm.split_off(n_esm);
                    if drop_esm {
                        esm.iter_mut().for_each(|c| *c = None);
                    }
                    if drop_both {
                        diary.iter_mut().for_each(|c| *c = None);
                    }
                    DailyRecord {
                        date: cfg.start_date + Days::new(t as u64),
                        esm,
                        diary,
                        phq2: if drop_both { None } else { Phq2Score::new(label) },
                    }
                })
                .collect();
            SubjectSeries {
                subject_id: format!("S{:0width$}", i + 1, width = id_width),
                records,
            }
        })
        .collect();
    Ok(Cohort { schema, subjects })
}
