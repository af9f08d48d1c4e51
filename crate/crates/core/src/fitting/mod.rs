//! Robust estimation of scaling-law parameters from run records.
//!
//! All fits minimize the sum of Huber penalties of log-space residuals
//! `log(predicted) - log(observed)` with a BFGS minimizer. The joint law is
//! fitted from every start in an initialization grid; the lowest final
//! objective wins, ties going to the earliest start.

mod bfgs;
mod huber;
mod invariance;
mod joint;
mod power_law;
mod synthetic;

use serde::{Deserialize, Serialize};

use crate::records::RunRecord;

pub use huber::{huber, huber_derivative};
pub use invariance::{gamma_invariance_check, GammaInvariance};
pub use joint::{fit_joint, holdout_validate, joint_objective_gradient};
pub use power_law::{fit_power_law, fit_power_law_with, robust_line, LineFit};
pub use synthetic::{generate_synthetic_records, sweep_grid, target_sweep, GridPoint};

/// Huber scale used when none is given.
pub const DEFAULT_HUBER_DELTA: f64 = 1e-3;

/// A starting point in the optimizer's coordinates
/// `[ln E, ln A, ln B, alpha, beta, gamma]`.
pub type InitPoint = [f64; 6];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub huber_delta: f64,
    pub max_iterations: usize,
    /// Relative objective change below which BFGS stops.
    pub convergence_tol: f64,
    pub init_grid: Vec<InitPoint>,
    /// Seeds the extra random starts; unused when `random_starts == 0`.
    pub seed: u64,
    /// Additional starts drawn uniformly from the bounding box of `init_grid`.
    pub random_starts: usize,
    /// Fit `gamma` from ratio-varying data first, then the size terms with
    /// `gamma` held fixed.
    pub two_stage: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            huber_delta: DEFAULT_HUBER_DELTA,
            max_iterations: 2000,
            convergence_tol: 1e-10,
            init_grid: default_init_grid(),
            seed: 0,
            random_starts: 0,
            two_stage: false,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> crate::Result<()> {
        use crate::Error;
        if !(self.huber_delta > 0.0 && self.huber_delta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "huber_delta must be > 0, got {}",
                self.huber_delta
            )));
        }
        if self.init_grid.is_empty() {
            return Err(Error::InvalidConfig("init_grid must not be empty".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be > 0".into()));
        }
        Ok(())
    }
}

/// Full Cartesian grid: `E in {0.5, 1, 2}`, `A, B in {1, 2, 4}`,
/// `alpha, beta in {0.1, 0.3, 0.5}`, `gamma in {0.05, 0.1, 0.2}`.
pub fn default_init_grid() -> Vec<InitPoint> {
    let e = [0.5f64, 1.0, 2.0].map(f64::ln);
    let ab = [1.0f64, 2.0, 4.0].map(f64::ln);
    let exps = [0.1, 0.3, 0.5];
    let gammas = [0.05, 0.1, 0.2];
    let mut grid = Vec::with_capacity(729);
    for &e0 in &e {
        for &a0 in &ab {
            for &b0 in &ab {
                for &al in &exps {
                    for &be in &exps {
                        for &g in &gammas {
                            grid.push([e0, a0, b0, al, be, g]);
                        }
                    }
                }
            }
        }
    }
    grid
}

/// Predicted and observed loss for one observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub run_id: String,
    pub predicted: f64,
    pub observed: f64,
    /// `ln(predicted) - ln(observed)`.
    pub log_residual: f64,
}

impl Residual {
    pub(crate) fn new(run_id: &str, predicted: f64, observed: f64) -> Self {
        Self {
            run_id: run_id.to_string(),
            predicted,
            observed,
            log_residual: predicted.ln() - observed.ln(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport<P> {
    pub params: P,
    /// Final Huber objective on the training observations.
    pub objective: f64,
    pub r_squared_loglog: f64,
    pub residuals: Vec<Residual>,
    pub n_records: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holdout_mae: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub holdout_residuals: Vec<Residual>,
    /// Index of the winning start (grid first, then random starts).
    pub init_index: usize,
    pub iterations: usize,
}

/// One (run, family) data point used by the fits.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Observation {
    pub run_id: String,
    pub n: f64,
    pub d: f64,
    pub p: f64,
    pub loss: f64,
    pub ln_n: f64,
    pub ln_d: f64,
    pub ln_p: f64,
    pub ln_loss: f64,
}

impl Observation {
    fn new(run_id: &str, n: f64, d: f64, p: f64, loss: f64) -> Self {
        Self {
            run_id: run_id.to_string(),
            n,
            d,
            p,
            loss,
            ln_n: n.ln(),
            ln_d: d.ln(),
            ln_p: p.ln(),
            ln_loss: loss.ln(),
        }
    }

    fn canonical_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.n
            .total_cmp(&other.n)
            .then(self.d.total_cmp(&other.d))
            .then(self.p.total_cmp(&other.p))
            .then(self.loss.total_cmp(&other.loss))
            .then_with(|| self.run_id.cmp(&other.run_id))
    }
}

/// Every record that reports a loss for `family`, in a canonical order so that
/// results do not depend on input order.
pub(crate) fn observations(records: &[RunRecord], family: &str) -> Vec<Observation> {
    let mut obs: Vec<Observation> = records
        .iter()
        .filter_map(|r| {
            let loss = r.loss(family)?;
            Some(Observation::new(
                &r.run_id,
                r.model_size_n,
                r.data_size_d,
                r.ratio(family),
                loss,
            ))
        })
        .collect();
    obs.sort_by(Observation::canonical_cmp);
    obs
}

pub(crate) fn count_distinct(values: impl Iterator<Item = f64>) -> usize {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

/// Coefficient of determination of `predicted` against `observed`, both
/// already in log space, clamped to `[0, 1]`.
pub(crate) fn r_squared(log_observed: &[f64], log_residuals: &[f64]) -> f64 {
    let n = log_observed.len() as f64;
    let mean = log_observed.iter().sum::<f64>() / n;
    let ss_tot: f64 = log_observed.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = log_residuals.iter().map(|r| r * r).sum();
    if ss_tot == 0.0 {
        return if ss_res == 0.0 { 1.0 } else { 0.0 };
    }
    (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
}
