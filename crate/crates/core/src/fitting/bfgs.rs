//! Dense BFGS with a strong-Wolfe line search.
//!
//! Sized for the handful of parameters the scaling-law fits need; the inverse
//! Hessian approximation is stored as a flat row-major matrix.

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_LINE_EVALS: usize = 40;

#[derive(Debug, Clone, Copy)]
pub(crate) struct BfgsOptions {
    pub max_iterations: usize,
    /// Stop once the relative objective decrease stays below this for two
    /// consecutive iterations.
    pub rel_tol: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each accepted iteration, starting with the initial value.
    #[cfg_attr(not(test), allow(dead_code))]
    pub trace: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn identity(n: usize, scale: f64) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = scale;
    }
    h
}

struct Probe {
    alpha: f64,
    value: f64,
    slope: f64,
}

/// Minimizes `f`, which returns the objective and writes the gradient.
pub(crate) fn minimize<F>(f: F, x0: &[f64], opts: BfgsOptions) -> Minimum
where
    F: Fn(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut trace = vec![fx];
    if !fx.is_finite() {
        return Minimum {
            x,
            value: fx,
            iterations: 0,
            converged: false,
            trace,
        };
    }

    let mut h = identity(n, 1.0);
    let mut h_is_identity = true;
    let mut dir = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut small_steps = 0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        if g.iter().all(|&v| v == 0.0) {
            converged = true;
            break;
        }
        for i in 0..n {
            dir[i] = -(0..n).map(|j| h[i * n + j] * g[j]).sum::<f64>();
        }
        let mut slope0 = dot(&dir, &g);
        if slope0.is_nan() || slope0 >= 0.0 {
            // Not a descent direction: fall back to steepest descent.
            h = identity(n, 1.0);
            h_is_identity = true;
            for i in 0..n {
                dir[i] = -g[i];
            }
            slope0 = -dot(&g, &g);
        }

        let step = line_search(&f, &x, fx, slope0, &dir, &mut x_new, &mut g_new);
        let Some(step) = step else {
            if h_is_identity {
                // No further decrease is representable.
                converged = true;
                break;
            }
            h = identity(n, 1.0);
            h_is_identity = true;
            continue;
        };
        iterations += 1;

        let s: Vec<f64> = dir.iter().map(|d| d * step.alpha).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let f_prev = fx;
        x.copy_from_slice(&x_new);
        g.copy_from_slice(&g_new);
        fx = step.value;
        trace.push(fx);

        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if h_is_identity {
                let yy = dot(&y, &y);
                if yy > 0.0 {
                    h = identity(n, sy / yy);
                }
            }
            update_inverse_hessian(&mut h, &s, &y, sy);
            h_is_identity = false;
        }

        let decrease = f_prev - fx;
        if fx == 0.0 {
            converged = true;
            break;
        }
        if decrease <= opts.rel_tol * f_prev.abs().max(fx.abs()) {
            small_steps += 1;
            if small_steps >= 2 {
                converged = true;
                break;
            }
        } else {
            small_steps = 0;
        }
    }

    Minimum {
        x,
        value: fx,
        iterations,
        converged,
        trace,
    }
}

fn update_inverse_hessian(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    // H y
    let hy: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| h[i * n + j] * y[j]).sum())
        .collect();
    let yhy = dot(y, &hy);
    // H+ = H - rho (Hy s^T + s y^T H) + (rho^2 y^T H y + rho) s s^T
    let coef = rho * rho * yhy + rho;
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + coef * s[i] * s[j];
        }
    }
}

fn evaluate<F>(
    f: &F,
    x: &[f64],
    dir: &[f64],
    alpha: f64,
    x_out: &mut [f64],
    g_out: &mut [f64],
) -> Probe
where
    F: Fn(&[f64], &mut [f64]) -> f64,
{
    for i in 0..x.len() {
        x_out[i] = x[i] + alpha * dir[i];
    }
    let value = f(x_out, g_out);
    let slope = if value.is_finite() {
        dot(g_out, dir)
    } else {
        f64::NAN
    };
    Probe {
        alpha,
        value,
        slope,
    }
}

/// Strong-Wolfe search along `dir`; on success `x_out`/`g_out` hold the
/// accepted point.
fn line_search<F>(
    f: &F,
    x: &[f64],
    f0: f64,
    slope0: f64,
    dir: &[f64],
    x_out: &mut [f64],
    g_out: &mut [f64],
) -> Option<Probe>
where
    F: Fn(&[f64], &mut [f64]) -> f64,
{
    let mut prev = Probe {
        alpha: 0.0,
        value: f0,
        slope: slope0,
    };
    let mut alpha = 1.0;
    let mut evals = 0;
    loop {
        evals += 1;
        let cur = evaluate(f, x, dir, alpha, x_out, g_out);
        let sufficient = cur.value <= f0 + C1 * cur.alpha * slope0;
        if !cur.value.is_finite() || !sufficient || (evals > 1 && cur.value >= prev.value) {
            return zoom(f, x, f0, slope0, dir, prev, cur, x_out, g_out, evals);
        }
        if cur.slope.abs() <= -C2 * slope0 {
            return Some(cur);
        }
        if cur.slope >= 0.0 {
            return zoom(f, x, f0, slope0, dir, cur, prev, x_out, g_out, evals);
        }
        if evals >= MAX_LINE_EVALS {
            // Accept the Armijo point even without the curvature condition.
            return Some(cur);
        }
        prev = cur;
        alpha *= 2.0;
    }
}

#[allow(clippy::too_many_arguments)]
fn zoom<F>(
    f: &F,
    x: &[f64],
    f0: f64,
    slope0: f64,
    dir: &[f64],
    mut lo: Probe,
    mut hi: Probe,
    x_out: &mut [f64],
    g_out: &mut [f64],
    mut evals: usize,
) -> Option<Probe>
where
    F: Fn(&[f64], &mut [f64]) -> f64,
{
    while evals < MAX_LINE_EVALS {
        evals += 1;
        let alpha = trial_step(&lo, &hi);
        if (alpha - lo.alpha).abs() <= f64::EPSILON * lo.alpha.abs().max(1e-300) {
            break;
        }
        let cur = evaluate(f, x, dir, alpha, x_out, g_out);
        if !cur.value.is_finite() || cur.value > f0 + C1 * alpha * slope0 || cur.value >= lo.value {
            hi = cur;
            continue;
        }
        if cur.slope.abs() <= -C2 * slope0 {
            return Some(cur);
        }
        if cur.slope * (hi.alpha - lo.alpha) >= 0.0 {
            hi = lo;
        }
        lo = cur;
    }
    if lo.alpha > 0.0 && lo.value < f0 {
        let probe = evaluate(f, x, dir, lo.alpha, x_out, g_out);
        return Some(probe);
    }
    None
}

/// Minimizer of the quadratic through `lo` (value and slope) and `hi` (value),
/// safeguarded to the interior of the bracket.
fn trial_step(lo: &Probe, hi: &Probe) -> f64 {
    let (a, b) = (lo.alpha, hi.alpha);
    let width = b - a;
    let mid = 0.5 * (a + b);
    if !hi.value.is_finite() {
        return mid;
    }
    let denom = 2.0 * (hi.value - lo.value - lo.slope * width);
    if denom <= 0.0 || !denom.is_finite() {
        return mid;
    }
    let t = a - lo.slope * width * width / denom;
    let (left, right) = if a < b { (a, b) } else { (b, a) };
    let margin = 0.1 * (right - left);
    if t.is_finite() && t > left + margin && t < right - margin {
        t
    } else {
        mid
    }
}
