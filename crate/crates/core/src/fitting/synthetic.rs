use indexmap::IndexMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::law::{find_family, predict_family_loss, FamilyParams};
use crate::mixture::MixtureVector;
use crate::records::RunRecord;

/// One simulated training configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub n: f64,
    pub d: f64,
    pub mixture: MixtureVector,
}

/// Draws one record per grid point with losses from the joint law times
/// `exp(eps)`, `eps ~ Normal(0, noise_sigma^2)`. `noise_sigma = 0` reproduces
/// the law exactly.
pub fn generate_synthetic_records(
    params: &[FamilyParams],
    grid: &[GridPoint],
    noise_sigma: f64,
    seed: u64,
) -> Result<Vec<RunRecord>> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "noise sigma must be finite and >= 0, got {noise_sigma}"
        )));
    }
    let normal = Normal::new(0.0, noise_sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = grid.len().max(1).to_string().len().max(4);
    let mut out = Vec::with_capacity(grid.len());
    for (i, point) in grid.iter().enumerate() {
        let mut losses = IndexMap::new();
        for (family, p) in point.mixture.iter() {
            let fp = find_family(params, family)?;
            let mut loss = predict_family_loss(fp, point.n, point.d, p)?;
            if noise_sigma > 0.0 {
                loss *= normal.sample(&mut rng).exp();
            }
            losses.insert(family.to_string(), loss);
        }
        out.push(RunRecord::new(
            format!("sim-{i:0width$}"),
            point.n,
            point.d,
            point.mixture.clone(),
            losses,
        )?);
    }
    Ok(out)
}

/// Grid that places `target` at each ratio in `ratios` and splits the
/// remaining mass evenly over `others`. A ratio of 1 yields a mono-family run.
pub fn target_sweep(
    target: &str,
    others: &[String],
    n_values: &[f64],
    d_values: &[f64],
    ratios: &[f64],
) -> Result<Vec<GridPoint>> {
    let mut grid = Vec::new();
    for &n in n_values {
        for &d in d_values {
            for &p in ratios {
                let mixture = if p == 1.0 {
                    MixtureVector::from_pairs([(target, 1.0)])?
                } else {
                    if others.is_empty() {
                        return Err(Error::InvalidMixture(format!(
                            "ratio {p} for `{target}` needs at least one other family"
                        )));
                    }
                    let rest = (1.0 - p) / others.len() as f64;
                    let mut pairs = vec![(target.to_string(), p)];
                    pairs.extend(others.iter().map(|o| (o.clone(), rest)));
                    MixtureVector::from_pairs(pairs)?
                };
                grid.push(GridPoint { n, d, mixture });
            }
        }
    }
    Ok(grid)
}

/// [`target_sweep`] for every family in turn, the rest acting as filler.
pub fn sweep_grid(
    families: &[String],
    n_values: &[f64],
    d_values: &[f64],
    ratios: &[f64],
) -> Result<Vec<GridPoint>> {
    let mut grid = Vec::new();
    for target in families {
        let others: Vec<String> = families.iter().filter(|f| *f != target).cloned().collect();
        grid.extend(target_sweep(target, &others, n_values, d_values, ratios)?);
    }
    Ok(grid)
}
