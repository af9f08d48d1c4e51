//! Benchmark fixtures.

use mixlaw_core::fitting::{generate_synthetic_records, target_sweep};
use mixlaw_core::optimizer::FamilyTerm;
use mixlaw_core::reference::{reference_params, REFERENCE_FAMILIES};
use mixlaw_core::{OptimizationProblem, PreferenceVector, RunRecord};

/// The five reference families at 85M parameters and 50B tokens, unweighted.
pub fn reference_problem() -> OptimizationProblem {
    let prefs = PreferenceVector::unweighted(REFERENCE_FAMILIES).unwrap();
    OptimizationProblem::from_family_params(&reference_params(), 85.0, 50.0, prefs).unwrap()
}

/// `k` families with spread-out losses and decay exponents. Deterministic.
pub fn wide_problem(k: usize) -> OptimizationProblem {
    let names: Vec<String> = (0..k).map(|i| format!("f{i}")).collect();
    let families = names
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let t = (i as f64 * 0.618_033_988_75).fract();
            FamilyTerm {
                family: f.clone(),
                l_star: 0.5 + 2.5 * t,
                gamma: 0.02 + 0.3 * (1.0 - t),
            }
        })
        .collect();
    let prefs = PreferenceVector::unweighted(names.iter().map(String::as_str)).unwrap();
    OptimizationProblem::new(families, prefs).unwrap()
}

/// Noisy 4x3x3 sweep of the Romance reference law with a filler family.
pub fn romance_records() -> Vec<RunRecord> {
    let truth = reference_params().remove(0);
    let mut filler = truth.clone();
    filler.family = "Filler".into();
    let grid = target_sweep(
        "Romance",
        &["Filler".to_string()],
        &[85.0, 397.0, 810.0, 1200.0],
        &[25.0, 50.0, 100.0],
        &[0.25, 0.5, 1.0],
    )
    .unwrap();
    generate_synthetic_records(&[truth, filler], &grid, 0.005, 42).unwrap()
}
