use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::power_law::robust_line;
use super::{count_distinct, observations, DEFAULT_HUBER_DELTA};
use crate::error::{Error, Result};
use crate::records::RunRecord;

/// Per-(n, d) slopes of log loss against log ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaInvariance {
    pub family: String,
    /// Group key `n=<n>,d=<d>` to fitted slope (an estimate of `-gamma`).
    pub slopes: IndexMap<String, f64>,
    /// Largest absolute difference between any two slopes.
    pub max_gap: f64,
}

/// Fits a robust log-log slope in every (n, d) group that has at least three
/// distinct ratios and reports how far apart the slopes are.
pub fn gamma_invariance_check(records: &[RunRecord], family: &str) -> Result<GammaInvariance> {
    let obs = observations(records, family);
    // Observations are sorted by (n, d, p), so groups are contiguous.
    let mut slopes = IndexMap::new();
    let mut start = 0;
    while start < obs.len() {
        let (n, d) = (obs[start].n, obs[start].d);
        let end = obs[start..]
            .iter()
            .position(|o| o.n != n || o.d != d)
            .map_or(obs.len(), |k| start + k);
        let group = &obs[start..end];
        if count_distinct(group.iter().map(|o| o.p)) >= 3 {
            let xs: Vec<f64> = group.iter().map(|o| o.ln_p).collect();
            let ys: Vec<f64> = group.iter().map(|o| o.ln_loss).collect();
            let line = robust_line(&xs, &ys, DEFAULT_HUBER_DELTA)?;
            slopes.insert(format!("n={n},d={d}"), line.slope);
        }
        start = end;
    }
    if slopes.len() < 2 {
        return Err(Error::InsufficientGroups(format!(
            "family `{family}` has {} (n, d) groups with at least 3 distinct ratios, need 2",
            slopes.len()
        )));
    }
    let values: Vec<f64> = slopes.values().copied().collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(GammaInvariance {
        family: family.to_string(),
        slopes,
        max_gap: max - min,
    })
}
