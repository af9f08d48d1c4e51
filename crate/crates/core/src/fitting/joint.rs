use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::bfgs::{minimize, BfgsOptions, Minimum};
use super::huber::{huber, huber_derivative};
use super::{
    count_distinct, observations, r_squared, FitConfig, FitReport, InitPoint, Observation, Residual,
};
use crate::error::{Error, Result};
use crate::law::{FamilyParams, MAX_DECAY_EXPONENT, MAX_SIZE_EXPONENT};
use crate::records::RunRecord;

const EXPONENT_FLOOR: f64 = 1e-9;
const MIN_RECORDS: usize = 6;
const MIN_HOLDOUT_RECORDS: usize = 10;

/// Huber objective of the joint law over one family's observations.
///
/// Coordinates are `[ln E, ln A, ln B, alpha, beta, gamma]`; exponents are
/// clamped into their admissible ranges before evaluation and the gradient of
/// a clamped coordinate is zero.
struct JointObjective<'a> {
    obs: &'a [Observation],
    delta: f64,
    fixed_gamma: Option<f64>,
}

fn clamp_exponent(v: f64, max: f64) -> (f64, bool) {
    if v < EXPONENT_FLOOR {
        (EXPONENT_FLOOR, false)
    } else if v > max {
        (max, false)
    } else {
        (v, true)
    }
}

fn decode(x: &[f64], fixed_gamma: Option<f64>) -> ([f64; 6], [bool; 3]) {
    let (alpha, fa) = clamp_exponent(x[3], MAX_SIZE_EXPONENT);
    let (beta, fb) = clamp_exponent(x[4], MAX_SIZE_EXPONENT);
    let (gamma, fg) = match fixed_gamma {
        Some(g) => (g, false),
        None => clamp_exponent(x[5], MAX_DECAY_EXPONENT),
    };
    (
        [x[0].exp(), x[1].exp(), x[2].exp(), alpha, beta, gamma],
        [fa, fb, fg],
    )
}

impl JointObjective<'_> {
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let ([e, a, b, alpha, beta, gamma], free) = decode(x, self.fixed_gamma);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut total = 0.0;
        for o in self.obs {
            let model_term = a * (-alpha * o.ln_n).exp();
            let data_term = b * (-beta * o.ln_d).exp();
            let mono = e + model_term + data_term;
            let r = mono.ln() - gamma * o.ln_p - o.ln_loss;
            total += huber(r, self.delta);
            let w = huber_derivative(r, self.delta) / mono;
            grad[0] += w * e;
            grad[1] += w * model_term;
            grad[2] += w * data_term;
            grad[3] -= w * model_term * o.ln_n;
            grad[4] -= w * data_term * o.ln_d;
            grad[5] -= huber_derivative(r, self.delta) * o.ln_p;
        }
        for (k, is_free) in free.iter().enumerate() {
            if !is_free {
                grad[3 + k] = 0.0;
            }
        }
        if total.is_finite() {
            total
        } else {
            f64::INFINITY
        }
    }
}

fn to_params(family: &str, x: &[f64], fixed_gamma: Option<f64>) -> FamilyParams {
    let ([e, a, b, alpha, beta, gamma], _) = decode(x, fixed_gamma);
    FamilyParams {
        family: family.to_string(),
        e,
        a,
        b,
        alpha,
        beta,
        gamma,
    }
}

fn check_coverage(family: &str, obs: &[Observation]) -> Result<()> {
    if obs.len() < MIN_RECORDS {
        return Err(Error::InsufficientData(format!(
            "family `{family}` has {} observations, need at least {MIN_RECORDS}",
            obs.len()
        )));
    }
    for (axis, distinct) in [
        ("n", count_distinct(obs.iter().map(|o| o.n))),
        ("d", count_distinct(obs.iter().map(|o| o.d))),
        ("p", count_distinct(obs.iter().map(|o| o.p))),
    ] {
        if distinct < 2 {
            return Err(Error::InsufficientCoverage {
                family: family.to_string(),
                axis,
                required: 2,
                found: distinct,
            });
        }
    }
    Ok(())
}

fn starting_points(config: &FitConfig) -> Vec<InitPoint> {
    let mut starts = config.init_grid.clone();
    if config.random_starts > 0 {
        let mut lo = [f64::INFINITY; 6];
        let mut hi = [f64::NEG_INFINITY; 6];
        for p in &config.init_grid {
            for k in 0..6 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for _ in 0..config.random_starts {
            let mut p = [0.0; 6];
            for k in 0..6 {
                p[k] = if hi[k] > lo[k] {
                    rng.gen_range(lo[k]..=hi[k])
                } else {
                    lo[k]
                };
            }
            starts.push(p);
        }
    }
    starts
}

/// Runs every start and returns `(index, minimum)` of the best one.
fn best_of(
    objective: &JointObjective<'_>,
    starts: &[(usize, InitPoint)],
    opts: BfgsOptions,
) -> (usize, Minimum) {
    let runs: Vec<Minimum> = starts
        .par_iter()
        .map(|(_, x0)| minimize(|x, g| objective.eval(x, g), x0, opts))
        .collect();
    let mut best: Option<(usize, Minimum)> = None;
    for ((index, _), run) in starts.iter().zip(runs) {
        let value = if run.value.is_nan() {
            f64::INFINITY
        } else {
            run.value
        };
        let better = match &best {
            None => true,
            Some((_, b)) => value < b.value,
        };
        if better {
            best = Some((*index, Minimum { value, ..run }));
        }
    }
    best.expect("at least one start")
}

/// Estimates `gamma` alone from a robust regression of log loss on log ratio
/// with one free intercept per (n, d) group.
fn fit_gamma_first(
    family: &str,
    obs: &[Observation],
    delta: f64,
    opts: BfgsOptions,
) -> Result<f64> {
    let mut keys: Vec<(f64, f64)> = Vec::new();
    let group_of: Vec<usize> = obs
        .iter()
        .map(
            |o| match keys.iter().position(|&(n, d)| n == o.n && d == o.d) {
                Some(i) => i,
                None => {
                    keys.push((o.n, o.d));
                    keys.len() - 1
                }
            },
        )
        .collect();
    let groups = keys.len();

    // Within-group least squares for the starting point.
    let mut sum_x = vec![0.0; groups];
    let mut sum_y = vec![0.0; groups];
    let mut count = vec![0.0; groups];
    for (o, &g) in obs.iter().zip(&group_of) {
        sum_x[g] += o.ln_p;
        sum_y[g] += o.ln_loss;
        count[g] += 1.0;
    }
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (o, &g) in obs.iter().zip(&group_of) {
        let dx = o.ln_p - sum_x[g] / count[g];
        sxx += dx * dx;
        sxy += dx * (o.ln_loss - sum_y[g] / count[g]);
    }
    if sxx == 0.0 {
        return Err(Error::InsufficientCoverage {
            family: family.to_string(),
            axis: "p within an (n, d) group",
            required: 2,
            found: 1,
        });
    }
    let slope = sxy / sxx;
    let mut x0: Vec<f64> = (0..groups)
        .map(|g| (sum_y[g] - slope * sum_x[g]) / count[g])
        .collect();
    x0.push(-slope);

    let objective = |x: &[f64], grad: &mut [f64]| {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let gamma = x[groups];
        let mut total = 0.0;
        for (o, &g) in obs.iter().zip(&group_of) {
            let r = x[g] - gamma * o.ln_p - o.ln_loss;
            total += huber(r, delta);
            let dr = huber_derivative(r, delta);
            grad[g] += dr;
            grad[groups] -= dr * o.ln_p;
        }
        total
    };
    let min = minimize(objective, &x0, opts);
    Ok(clamp_exponent(min.x[groups], MAX_DECAY_EXPONENT).0)
}

fn fit_observations(
    family: &str,
    obs: &[Observation],
    config: &FitConfig,
) -> Result<FitReport<FamilyParams>> {
    config.validate()?;
    check_coverage(family, obs)?;
    let opts = BfgsOptions {
        max_iterations: config.max_iterations,
        rel_tol: config.convergence_tol,
    };
    let starts = starting_points(config);

    let (fixed_gamma, indexed): (Option<f64>, Vec<(usize, InitPoint)>) = if config.two_stage {
        let gamma = fit_gamma_first(family, obs, config.huber_delta, opts)?;
        log::debug!("two-stage fit for `{family}`: gamma = {gamma}");
        // Starts differing only in gamma collapse onto one.
        let mut seen: Vec<[u64; 5]> = Vec::new();
        let mut unique = Vec::new();
        for (i, s) in starts.iter().enumerate() {
            let key = [s[0], s[1], s[2], s[3], s[4]].map(f64::to_bits);
            if !seen.contains(&key) {
                seen.push(key);
                let mut s = *s;
                s[5] = gamma;
                unique.push((i, s));
            }
        }
        (Some(gamma), unique)
    } else {
        (None, starts.into_iter().enumerate().collect())
    };

    let objective = JointObjective {
        obs,
        delta: config.huber_delta,
        fixed_gamma,
    };
    let (init_index, best) = best_of(&objective, &indexed, opts);
    let params = to_params(family, &best.x, fixed_gamma);
    if !best.converged {
        return Err(Error::NonConvergence {
            best: Box::new(params),
            objective: best.value,
            iterations: best.iterations,
        });
    }
    log::debug!(
        "fit for `{family}`: objective {:e} from start {init_index} in {} iterations",
        best.value,
        best.iterations
    );

    let residuals: Vec<Residual> = obs
        .iter()
        .map(|o| {
            let predicted = predict(&params, o);
            Residual::new(&o.run_id, predicted, o.loss)
        })
        .collect();
    let logs: Vec<f64> = residuals.iter().map(|r| r.log_residual).collect();
    let observed: Vec<f64> = obs.iter().map(|o| o.ln_loss).collect();
    Ok(FitReport {
        params,
        objective: best.value,
        r_squared_loglog: r_squared(&observed, &logs),
        residuals,
        n_records: obs.len(),
        holdout_mae: None,
        holdout_residuals: Vec::new(),
        init_index,
        iterations: best.iterations,
    })
}

fn predict(params: &FamilyParams, o: &Observation) -> f64 {
    (params.e
        + params.a * (-params.alpha * o.ln_n).exp()
        + params.b * (-params.beta * o.ln_d).exp())
        * (-params.gamma * o.ln_p).exp()
}

/// Fits all six joint-law coefficients for `family` from the records that
/// report a loss for it.
pub fn fit_joint(
    records: &[RunRecord],
    family: &str,
    config: &FitConfig,
) -> Result<FitReport<FamilyParams>> {
    let obs = observations(records, family);
    fit_observations(family, &obs, config)
}

/// Fits on the highest-loss `1 - holdout_fraction` of the family's
/// observations and reports the mean absolute error on the rest.
pub fn holdout_validate(
    records: &[RunRecord],
    family: &str,
    config: &FitConfig,
    holdout_fraction: f64,
) -> Result<FitReport<FamilyParams>> {
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "holdout fraction must lie in (0, 1), got {holdout_fraction}"
        )));
    }
    let mut obs = observations(records, family);
    if obs.len() < MIN_HOLDOUT_RECORDS {
        return Err(Error::InsufficientData(format!(
            "holdout validation for `{family}` needs at least {MIN_HOLDOUT_RECORDS} observations, got {}",
            obs.len()
        )));
    }
    // Stable sort keeps the canonical order among equal losses.
    obs.sort_by(|a, b| b.loss.total_cmp(&a.loss));
    let (train, holdout) = split_sizes(obs.len(), holdout_fraction);
    debug_assert_eq!(train + holdout, obs.len());
    let (train_obs, holdout_obs) = obs.split_at(train);

    let mut train_sorted = train_obs.to_vec();
    train_sorted.sort_by(Observation::canonical_cmp);
    let mut report = fit_observations(family, &train_sorted, config)?;

    let holdout_residuals: Vec<Residual> = holdout_obs
        .iter()
        .map(|o| Residual::new(&o.run_id, predict(&report.params, o), o.loss))
        .collect();
    let mae = holdout_residuals
        .iter()
        .map(|r| (r.predicted - r.observed).abs())
        .sum::<f64>()
        / holdout_residuals.len() as f64;
    report.holdout_mae = Some(mae);
    report.holdout_residuals = holdout_residuals;
    Ok(report)
}

/// `(train, holdout)` sizes for `total` observations.
pub(crate) fn split_sizes(total: usize, holdout_fraction: f64) -> (usize, usize) {
    let holdout = ((total as f64 * holdout_fraction).round() as usize).clamp(1, total - 1);
    (total - holdout, holdout)
}

/// Value and gradient of the joint objective at `params`, in the optimizer's
/// coordinates `[ln E, ln A, ln B, alpha, beta, gamma]`.
pub fn joint_objective_gradient(
    records: &[RunRecord],
    params: &FamilyParams,
    delta: f64,
) -> (f64, [f64; 6]) {
    let obs = observations(records, &params.family);
    let objective = JointObjective {
        obs: &obs,
        delta,
        fixed_gamma: None,
    };
    let x = [
        params.e.ln(),
        params.a.ln(),
        params.b.ln(),
        params.alpha,
        params.beta,
        params.gamma,
    ];
    let mut grad = [0.0; 6];
    let value = objective.eval(&x, &mut grad);
    (value, grad)
}
