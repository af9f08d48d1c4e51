use serde::{Deserialize, Serialize};

use super::bfgs::{minimize, BfgsOptions};
use super::huber::{huber, huber_derivative};
use super::{count_distinct, r_squared, FitReport, Residual, DEFAULT_HUBER_DELTA};
use crate::error::{Error, Result};
use crate::law::{PowerLawParams, MAX_DECAY_EXPONENT};

/// Straight line `y = intercept + slope * x` fitted under the Huber penalty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub objective: f64,
    pub iterations: usize,
}

fn ordinary_least_squares(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

/// Huber-robust regression line, started from ordinary least squares.
///
/// The problem is convex, so the single start reaches the global minimum.
pub fn robust_line(xs: &[f64], ys: &[f64], delta: f64) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 paired points, got {}",
            xs.len().min(ys.len())
        )));
    }
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "huber delta must be > 0, got {delta}"
        )));
    }
    let (c0, s0) = ordinary_least_squares(xs, ys)
        .ok_or_else(|| Error::Degenerate("all abscissae are identical".into()))?;
    let objective = |theta: &[f64], grad: &mut [f64]| {
        grad[0] = 0.0;
        grad[1] = 0.0;
        let mut total = 0.0;
        for (&x, &y) in xs.iter().zip(ys) {
            let r = theta[0] + theta[1] * x - y;
            total += huber(r, delta);
            let dr = huber_derivative(r, delta);
            grad[0] += dr;
            grad[1] += dr * x;
        }
        total
    };
    let min = minimize(
        objective,
        &[c0, s0],
        BfgsOptions {
            max_iterations: 2000,
            rel_tol: 1e-12,
        },
    );
    Ok(LineFit {
        intercept: min.x[0],
        slope: min.x[1],
        objective: min.value,
        iterations: min.iterations,
    })
}

/// Fits `loss = l_star * p^(-gamma)` to `(p, loss)` points with the default
/// Huber scale.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<FitReport<PowerLawParams>> {
    fit_power_law_with(points, DEFAULT_HUBER_DELTA, "")
}

/// As [`fit_power_law`], with an explicit Huber scale and family label.
pub fn fit_power_law_with(
    points: &[(f64, f64)],
    delta: f64,
    family: &str,
) -> Result<FitReport<PowerLawParams>> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "power-law fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    for &(p, loss) in points {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Domain {
                what: "sampling ratio must lie in (0, 1]",
                value: p,
            });
        }
        if !(loss > 0.0 && loss.is_finite()) {
            return Err(Error::Domain {
                what: "loss must be positive",
                value: loss,
            });
        }
    }
    if count_distinct(points.iter().map(|&(p, _)| p)) < 2 {
        return Err(Error::Degenerate(
            "all sampling ratios are identical".into(),
        ));
    }
    let xs: Vec<f64> = points.iter().map(|&(p, _)| p.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, l)| l.ln()).collect();
    let line = robust_line(&xs, &ys, delta)?;
    let gamma = -line.slope;
    if !(gamma > 0.0 && gamma <= MAX_DECAY_EXPONENT) {
        return Err(Error::Domain {
            what: "fitted decay exponent outside (0, 1]",
            value: gamma,
        });
    }
    let params = PowerLawParams {
        family: family.to_string(),
        l_star: line.intercept.exp(),
        gamma,
    };
    let residuals: Vec<Residual> = points
        .iter()
        .enumerate()
        .map(|(i, &(p, loss))| {
            let predicted = params.l_star * p.powf(-gamma);
            Residual::new(&format!("point-{i}"), predicted, loss)
        })
        .collect();
    let logs: Vec<f64> = residuals.iter().map(|r| r.log_residual).collect();
    Ok(FitReport {
        r_squared_loglog: r_squared(&ys, &logs),
        objective: line.objective,
        n_records: points.len(),
        residuals,
        params,
        holdout_mae: None,
        holdout_residuals: Vec::new(),
        init_index: 0,
        iterations: line.iterations,
    })
}
