//! Optimal family sampling ratios under a preference vector.
//!
//! Minimizes `sum_i w_i * L*_i * p_i^(-gamma_i)` over the probability simplex.
//! Writing `c_i = w_i * L*_i * gamma_i`, stationarity of the Lagrangian gives
//! `p_i = (c_i / lambda)^(1 / (1 + gamma_i))`, and the simplex constraint turns
//! into one scalar equation in the multiplier:
//!
//! ```text
//! sum_i c_i^(1/(1+gamma_i)) * lambda^(-1/(1+gamma_i)) = 1
//! ```
//!
//! The left-hand side is strictly decreasing in `lambda`, so the root is
//! unique and bisection finds it. Each objective term is strictly convex for
//! `p > 0`, so the stationary point is the global minimum.
//!
//! Two closed-form approximations are also provided: the zero-order
//! `p_i = c_i / sum_j c_j` and a first-order expansion in `gamma`.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::law::{mono_family_loss, predict_family_loss, FamilyParams, PowerLawParams};
use crate::mixture::{ensure_same_families, MixtureVector, PreferenceVector};

/// Relative bracket width at which bisection stops.
pub const LAMBDA_REL_TOL: f64 = 1e-12;
const MAX_BRACKET_EXPANSIONS: usize = 2000;

/// Loss-curve data for one family entering the optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyTerm {
    pub family: String,
    pub l_star: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationProblem {
    pub families: Vec<FamilyTerm>,
    pub prefs: PreferenceVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    ZeroOrder,
    FirstOrder,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::ZeroOrder => "zero_order",
            Method::FirstOrder => "first_order",
        })
    }
}

/// Family with positive weight and its product `c = w * L* * gamma`.
#[derive(Debug, Clone)]
struct ActiveTerm {
    family: String,
    weight: f64,
    l_star: f64,
    gamma: f64,
    product: f64,
}

impl OptimizationProblem {
    pub fn new(families: Vec<FamilyTerm>, prefs: PreferenceVector) -> Result<Self> {
        if families.is_empty() {
            return Err(Error::InsufficientData("problem has no families".into()));
        }
        for t in &families {
            if !(t.l_star > 0.0 && t.l_star.is_finite()) {
                return Err(Error::InvalidParams {
                    family: t.family.clone(),
                    reason: format!("l_star must be > 0, got {}", t.l_star),
                });
            }
            if !(t.gamma > 0.0 && t.gamma.is_finite()) {
                return Err(Error::InvalidParams {
                    family: t.family.clone(),
                    reason: format!("gamma must be > 0, got {}", t.gamma),
                });
            }
        }
        let mut names: Vec<&str> = families.iter().map(|t| t.family.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParams {
                family: names.windows(2).find(|w| w[0] == w[1]).unwrap()[0].to_string(),
                reason: "family listed twice".into(),
            });
        }
        ensure_same_families(families.iter().map(|t| t.family.as_str()), prefs.families())?;
        Ok(Self { families, prefs })
    }

    /// Uses `L* = L*(n, d)` from the joint-law coefficients.
    pub fn from_family_params(
        all_params: &[FamilyParams],
        n: f64,
        d: f64,
        prefs: PreferenceVector,
    ) -> Result<Self> {
        let terms = all_params
            .iter()
            .map(|p| {
                Ok(FamilyTerm {
                    family: p.family.clone(),
                    l_star: mono_family_loss(p, n, d)?,
                    gamma: p.gamma,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(terms, prefs)
    }

    pub fn from_power_laws(all_params: &[PowerLawParams], prefs: PreferenceVector) -> Result<Self> {
        let terms = all_params
            .iter()
            .map(|p| FamilyTerm {
                family: p.family.clone(),
                l_star: p.l_star,
                gamma: p.gamma,
            })
            .collect();
        Self::new(terms, prefs)
    }

    fn active(&self) -> Vec<ActiveTerm> {
        self.families
            .iter()
            .filter_map(|t| {
                let weight = self.prefs.get(&t.family).unwrap_or(0.0);
                (weight > 0.0).then(|| ActiveTerm {
                    family: t.family.clone(),
                    weight,
                    l_star: t.l_star,
                    gamma: t.gamma,
                    product: weight * t.l_star * t.gamma,
                })
            })
            .collect()
    }

    fn excluded(&self) -> Vec<String> {
        self.families
            .iter()
            .filter(|t| self.prefs.get(&t.family).unwrap_or(0.0) == 0.0)
            .map(|t| t.family.clone())
            .collect()
    }

    /// Left-hand side `sum_i c_i^(1/(1+gamma_i)) lambda^(-1/(1+gamma_i))` of
    /// the multiplier equation.
    pub fn multiplier_sum(&self, lambda: f64) -> f64 {
        multiplier_excess(&self.active(), lambda) + 1.0
    }

    /// Weighted objective `sum_i w_i L*_i p_i^(-gamma_i)` over the
    /// positive-weight families. Every such family must be in `mixture`.
    pub fn objective(&self, mixture: &MixtureVector) -> Result<f64> {
        let mut total = 0.0;
        for t in self.active() {
            let p = mixture
                .get(&t.family)
                .ok_or_else(|| Error::UnknownFamily(t.family.clone()))?;
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::Domain {
                    what: "sampling ratio must lie in (0, 1]",
                    value: p,
                });
            }
            total += t.weight * t.l_star * p.powf(-t.gamma);
        }
        Ok(total)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Ratios of the positive-weight families.
    pub mixture: MixtureVector,
    /// Zero-weight families; they receive no data.
    pub excluded: Vec<String>,
    pub lambda_star: f64,
    pub method: Method,
    pub objective: f64,
    pub iterations: usize,
}

impl SolveReport {
    /// Ratios in problem order with excluded families at 0.
    pub fn ratios(&self, problem: &OptimizationProblem) -> IndexMap<String, f64> {
        problem
            .families
            .iter()
            .map(|t| (t.family.clone(), self.mixture.get(&t.family).unwrap_or(0.0)))
            .collect()
    }

    /// Largest relative deviation of `c_i p_i^(-(1+gamma_i))` from `lambda`.
    pub fn stationarity_residual(&self, problem: &OptimizationProblem) -> f64 {
        problem
            .active()
            .iter()
            .map(|t| {
                let p = self.mixture.get(&t.family).unwrap_or(f64::NAN);
                (t.product * p.powf(-(1.0 + t.gamma)) - self.lambda_star).abs() / self.lambda_star
            })
            .fold(0.0, f64::max)
    }
}

/// Left-hand side of the multiplier equation minus one.
fn multiplier_excess(terms: &[ActiveTerm], lambda: f64) -> f64 {
    terms
        .iter()
        .map(|t| {
            let k = 1.0 / (1.0 + t.gamma);
            (t.product / lambda).powf(k)
        })
        .sum::<f64>()
        - 1.0
}

/// Root of a strictly decreasing function by bracket expansion and bisection.
/// Returns `(root, iterations)`.
fn bisect_decreasing<F: Fn(f64) -> f64>(f: F, guess: f64, rel_tol: f64) -> Result<(f64, usize)> {
    let mut lo = guess / 10.0;
    let mut hi = guess * 10.0;
    let mut expansions = 0;
    while f(lo) < 0.0 {
        lo /= 10.0;
        expansions += 1;
        if expansions > MAX_BRACKET_EXPANSIONS || lo == 0.0 {
            return Err(Error::Degenerate(
                "could not bracket the multiplier from below".into(),
            ));
        }
    }
    while f(hi) > 0.0 {
        hi *= 10.0;
        expansions += 1;
        if expansions > MAX_BRACKET_EXPANSIONS || !hi.is_finite() {
            return Err(Error::Degenerate(
                "could not bracket the multiplier from above".into(),
            ));
        }
    }
    let mut iterations = 0;
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v == 0.0 {
            return Ok((mid, iterations + 1));
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok((0.5 * (lo + hi), iterations))
}

fn mixture_from(terms: &[ActiveTerm], raw: &[f64]) -> Result<MixtureVector> {
    let total: f64 = raw.iter().sum();
    MixtureVector::from_pairs(
        terms
            .iter()
            .zip(raw)
            .map(|(t, &p)| (t.family.clone(), p / total)),
    )
}

fn finish(
    problem: &OptimizationProblem,
    mixture: MixtureVector,
    lambda_star: f64,
    method: Method,
    iterations: usize,
) -> Result<SolveReport> {
    let objective = problem.objective(&mixture)?;
    Ok(SolveReport {
        mixture,
        excluded: problem.excluded(),
        lambda_star,
        method,
        objective,
        iterations,
    })
}

/// Exact optimum via the scalar multiplier equation.
pub fn solve_exact(problem: &OptimizationProblem) -> Result<SolveReport> {
    let terms = problem.active();
    let guess: f64 = terms.iter().map(|t| t.product).sum();
    let (lambda, iterations) =
        bisect_decreasing(|l| multiplier_excess(&terms, l), guess, LAMBDA_REL_TOL)?;
    let raw: Vec<f64> = terms
        .iter()
        .map(|t| (t.product / lambda).powf(1.0 / (1.0 + t.gamma)))
        .collect();
    let mixture = mixture_from(&terms, &raw)?;
    finish(problem, mixture, lambda, Method::Exact, iterations)
}

/// `p_i = c_i / sum_j c_j`; exact in the limit of vanishing exponents.
pub fn solve_zero_order(problem: &OptimizationProblem) -> Result<SolveReport> {
    let terms = problem.active();
    let raw: Vec<f64> = terms.iter().map(|t| t.product).collect();
    let lambda: f64 = raw.iter().sum();
    let mixture = mixture_from(&terms, &raw)?;
    finish(problem, mixture, lambda, Method::ZeroOrder, 0)
}

/// First-order expansion of the multiplier equation in `gamma` (and of
/// `ln lambda` around 1), renormalized onto the simplex.
pub fn solve_first_order(problem: &OptimizationProblem) -> Result<SolveReport> {
    let terms = problem.active();
    let powered: Vec<f64> = terms
        .iter()
        .map(|t| t.product.powf(1.0 / (1.0 + t.gamma)))
        .collect();
    let numerator: f64 = terms
        .iter()
        .zip(&powered)
        .map(|(t, s)| s * (1.0 - t.gamma))
        .sum();
    let denominator: f64 = 1.0
        + terms
            .iter()
            .zip(&powered)
            .map(|(t, s)| t.gamma * s)
            .sum::<f64>();
    let lambda = numerator / denominator;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Degenerate(format!(
            "first-order multiplier is not positive ({lambda})"
        )));
    }
    let raw: Vec<f64> = terms
        .iter()
        .map(|t| (t.product / lambda).powf(1.0 / (1.0 + t.gamma)))
        .collect();
    let mixture = mixture_from(&terms, &raw)?;
    finish(problem, mixture, lambda, Method::FirstOrder, 0)
}

pub fn solve(problem: &OptimizationProblem, method: Method) -> Result<SolveReport> {
    match method {
        Method::Exact => solve_exact(problem),
        Method::ZeroOrder => solve_zero_order(problem),
        Method::FirstOrder => solve_first_order(problem),
    }
}

/// `w_i = 1 / L*_i(n, d)`: each family's loss is measured relative to its
/// mono-family loss.
pub fn preference_normalized(
    all_params: &[FamilyParams],
    n: f64,
    d: f64,
) -> Result<PreferenceVector> {
    let pairs = all_params
        .iter()
        .map(|p| Ok((p.family.clone(), 1.0 / mono_family_loss(p, n, d)?)))
        .collect::<Result<Vec<_>>>()?;
    PreferenceVector::from_pairs(pairs)
}

pub fn baseline_uniform<S: AsRef<str>>(families: &[S]) -> Result<MixtureVector> {
    if families.is_empty() {
        return Err(Error::InsufficientData(
            "uniform baseline needs at least one family".into(),
        ));
    }
    MixtureVector::uniform(families.iter().map(|f| f.as_ref().to_string()))
}

fn check_counts(family_tokens: &IndexMap<String, f64>) -> Result<()> {
    if family_tokens.is_empty() {
        return Err(Error::InsufficientData("no token counts given".into()));
    }
    for (family, &count) in family_tokens {
        if !(count > 0.0 && count.is_finite()) {
            return Err(Error::InvalidManifest(format!(
                "token count for `{family}` must be positive, got {count}"
            )));
        }
    }
    Ok(())
}

/// Ratios proportional to token counts.
pub fn baseline_by_tokens(family_tokens: &IndexMap<String, f64>) -> Result<MixtureVector> {
    baseline_smoothed(family_tokens, 1.0)
}

/// `p_i = q_i^alpha / sum_j q_j^alpha` with `q_i` the token share.
pub fn baseline_smoothed(
    family_tokens: &IndexMap<String, f64>,
    alpha: f64,
) -> Result<MixtureVector> {
    check_counts(family_tokens)?;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "smoothing exponent must be >= 0, got {alpha}"
        )));
    }
    let total: f64 = family_tokens.values().sum();
    MixtureVector::from_weights(
        family_tokens
            .iter()
            .map(|(f, &c)| (f.clone(), (c / total).powf(alpha))),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyRow {
    pub name: String,
    pub ratios: MixtureVector,
    pub losses: IndexMap<String, f64>,
    /// Preference-weighted sum of `losses`.
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyTable {
    pub n_millions: f64,
    pub d_billions: f64,
    pub rows: Vec<StrategyRow>,
    /// Name of the row with the smallest total (first on ties).
    pub best: String,
}

/// Predicted per-family and weighted total losses for each named mixture.
pub fn compare_strategies(
    all_params: &[FamilyParams],
    prefs: &PreferenceVector,
    n: f64,
    d: f64,
    strategies: &[(String, MixtureVector)],
) -> Result<StrategyTable> {
    if strategies.is_empty() {
        return Err(Error::InsufficientData("no strategies to compare".into()));
    }
    ensure_same_families(
        all_params.iter().map(|p| p.family.as_str()),
        prefs.families(),
    )?;
    let mut rows = Vec::with_capacity(strategies.len());
    for (name, mixture) in strategies {
        ensure_same_families(
            all_params.iter().map(|p| p.family.as_str()),
            mixture.families(),
        )?;
        let mut losses = IndexMap::new();
        let mut total = 0.0;
        for params in all_params {
            let p = mixture.get(&params.family).unwrap_or_default();
            let loss = predict_family_loss(params, n, d, p)?;
            total += prefs.get(&params.family).unwrap_or_default() * loss;
            losses.insert(params.family.clone(), loss);
        }
        rows.push(StrategyRow {
            name: name.clone(),
            ratios: mixture.clone(),
            losses,
            total,
        });
    }
    let best = rows
        .iter()
        .fold(None::<&StrategyRow>, |best, row| match best {
            Some(b) if b.total <= row.total => Some(b),
            _ => Some(row),
        })
        .map(|r| r.name.clone())
        .unwrap_or_default();
    Ok(StrategyTable {
        n_millions: n,
        d_billions: d,
        rows,
        best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(terms: &[(&str, f64, f64, f64)]) -> OptimizationProblem {
        let families = terms
            .iter()
            .map(|&(f, l, g, _)| FamilyTerm {
                family: f.into(),
                l_star: l,
                gamma: g,
            })
            .collect();
        let prefs = PreferenceVector::from_pairs(terms.iter().map(|&(f, _, _, w)| (f, w))).unwrap();
        OptimizationProblem::new(families, prefs).unwrap()
    }

    #[test]
    fn symmetric_pair_splits_evenly() {
        let p = problem(&[("a", 2.0, 0.1, 1.0), ("b", 2.0, 0.1, 1.0)]);
        for method in [Method::Exact, Method::ZeroOrder, Method::FirstOrder] {
            let r = solve(&p, method).unwrap();
            assert!(
                (r.mixture.get("a").unwrap() - 0.5).abs() < 1e-12,
                "{method}"
            );
        }
    }

    #[test]
    fn single_family_takes_everything() {
        let p = problem(&[("a", 2.0, 0.1, 1.0)]);
        assert_eq!(solve_zero_order(&p).unwrap().mixture.get("a"), Some(1.0));
        assert!((solve_exact(&p).unwrap().mixture.get("a").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_weight_family_is_excluded() {
        let p = problem(&[
            ("a", 2.0, 0.1, 1.0),
            ("b", 1.0, 0.2, 0.0),
            ("c", 1.5, 0.1, 2.0),
        ]);
        let r = solve_exact(&p).unwrap();
        assert_eq!(r.excluded, vec!["b".to_string()]);
        assert!(!r.mixture.contains("b"));
        let ratios = r.ratios(&p);
        assert_eq!(ratios["b"], 0.0);
        assert_eq!(ratios.keys().collect::<Vec<_>>(), ["a", "b", "c"]);
    }

    #[test]
    fn exact_solution_is_stationary() {
        let p = problem(&[
            ("a", 2.2, 0.08, 1.0),
            ("b", 0.6, 0.14, 1.0),
            ("c", 1.5, 0.11, 1.0),
        ]);
        let r = solve_exact(&p).unwrap();
        assert!(
            r.stationarity_residual(&p) < 1e-8,
            "{}",
            r.stationarity_residual(&p)
        );
    }

    #[test]
    fn bisection_expands_bracket() {
        let (root, _) = bisect_decreasing(|x| 1e6 - x, 1.0, 1e-12).unwrap();
        assert!((root - 1e6).abs() < 1e-5);
        let (root, _) = bisect_decreasing(|x| 1e-6 - x, 1.0, 1e-12).unwrap();
        assert!((root - 1e-6).abs() < 1e-17);
    }

    #[test]
    fn baseline_errors() {
        assert!(baseline_uniform::<&str>(&[]).is_err());
        let bad = IndexMap::from([("a".to_string(), 0.0)]);
        assert!(baseline_by_tokens(&bad).is_err());
    }

    #[test]
    fn duplicate_terms_rejected() {
        let families = vec![
            FamilyTerm {
                family: "a".into(),
                l_star: 1.0,
                gamma: 0.1,
            },
            FamilyTerm {
                family: "a".into(),
                l_star: 1.0,
                gamma: 0.1,
            },
        ];
        let prefs = PreferenceVector::unweighted(["a"]).unwrap();
        assert!(OptimizationProblem::new(families, prefs).is_err());
    }
}
