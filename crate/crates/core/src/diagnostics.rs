//! Checks that a family's loss depends only on its own sampling ratio.
//!
//! Runs that hold one family's ratio fixed while the rest of the mixture
//! varies should report (nearly) the same loss for that family. These helpers
//! summarize that spread and the slope of the family's loss against another
//! family's ratio.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::records::RunRecord;

pub const DEFAULT_REFERENCE_RATIO: f64 = 0.2;
pub const DEFAULT_SPREAD_THRESHOLD: f64 = 0.02;

/// Ratios closer than this are treated as the same design point.
const RATIO_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioGroup {
    pub fixed_ratio: f64,
    pub run_ids: Vec<String>,
    pub normalized_losses: Vec<f64>,
    /// `(max - min) / mean` of the normalized losses.
    pub relative_spread: f64,
    /// Sample standard deviation of the normalized losses.
    pub std_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub family: String,
    pub reference_ratio: f64,
    pub threshold: f64,
    pub groups: Vec<RatioGroup>,
    pub verdict: Verdict,
}

/// One normalized observation, for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependencePoint {
    pub run_id: String,
    pub fixed_ratio: f64,
    pub complement_ratio: f64,
    pub normalized_loss: f64,
}

struct Sample<'a> {
    record: &'a RunRecord,
    ratio: f64,
    loss: f64,
}

/// Records reporting `family`, grouped by its ratio, groups ascending and
/// members ordered by run id then loss.
fn grouped<'a>(records: &'a [RunRecord], family: &str) -> Vec<Vec<Sample<'a>>> {
    let mut samples: Vec<Sample<'a>> = records
        .iter()
        .filter_map(|r| {
            Some(Sample {
                record: r,
                ratio: r.ratio(family),
                loss: r.loss(family)?,
            })
        })
        .collect();
    samples.sort_by(|a, b| {
        a.ratio
            .total_cmp(&b.ratio)
            .then_with(|| a.record.run_id.cmp(&b.record.run_id))
            .then(a.loss.total_cmp(&b.loss))
    });
    let mut groups: Vec<Vec<Sample<'a>>> = Vec::new();
    for s in samples {
        match groups.last_mut() {
            Some(g) if (s.ratio - g[0].ratio).abs() <= RATIO_EPS => g.push(s),
            _ => groups.push(vec![s]),
        }
    }
    groups
}

fn reference_mean(groups: &[Vec<Sample<'_>>], family: &str, reference_ratio: f64) -> Result<f64> {
    let group = groups
        .iter()
        .find(|g| (g[0].ratio - reference_ratio).abs() <= RATIO_EPS)
        .ok_or_else(|| {
            Error::InsufficientReplication(format!(
                "no runs with `{family}` at the reference ratio {reference_ratio}"
            ))
        })?;
    Ok(group.iter().map(|s| s.loss).sum::<f64>() / group.len() as f64)
}

/// Groups runs by `family`'s ratio, normalizes the family's losses by the
/// mean loss at `reference_ratio` and passes when every group's relative
/// spread is at most `threshold`.
pub fn independence_report(
    records: &[RunRecord],
    family: &str,
    reference_ratio: f64,
    threshold: f64,
) -> Result<IndependenceReport> {
    if threshold.is_nan() || threshold < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "threshold must be >= 0, got {threshold}"
        )));
    }
    let groups = grouped(records, family);
    if groups.is_empty() {
        return Err(Error::InsufficientReplication(format!(
            "no runs report `{family}`"
        )));
    }
    if let Some(g) = groups.iter().find(|g| g.len() < 2) {
        return Err(Error::InsufficientReplication(format!(
            "`{family}` at ratio {} appears in only one run",
            g[0].ratio
        )));
    }
    let reference = reference_mean(&groups, family, reference_ratio)?;

    let mut out = Vec::with_capacity(groups.len());
    for g in &groups {
        let normalized: Vec<f64> = g.iter().map(|s| s.loss / reference).collect();
        let k = normalized.len() as f64;
        let mean = normalized.iter().sum::<f64>() / k;
        let max = normalized.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = normalized.iter().copied().fold(f64::INFINITY, f64::min);
        let var = normalized.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
        out.push(RatioGroup {
            fixed_ratio: g[0].ratio,
            run_ids: g.iter().map(|s| s.record.run_id.clone()).collect(),
            normalized_losses: normalized,
            relative_spread: (max - min) / mean,
            std_dev: var.sqrt(),
        });
    }
    let verdict = if out.iter().all(|g| g.relative_spread <= threshold) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(IndependenceReport {
        family: family.to_string(),
        reference_ratio,
        threshold,
        groups: out,
        verdict,
    })
}

/// Normalized losses of `family` with the ratio of `complement` (or, without
/// one, the remaining mass `1 - ratio`) as the second coordinate.
pub fn independence_points(
    records: &[RunRecord],
    family: &str,
    complement: Option<&str>,
    reference_ratio: f64,
) -> Result<Vec<IndependencePoint>> {
    let groups = grouped(records, family);
    let reference = reference_mean(&groups, family, reference_ratio)?;
    Ok(groups
        .iter()
        .flatten()
        .map(|s| IndependencePoint {
            run_id: s.record.run_id.clone(),
            fixed_ratio: s.ratio,
            complement_ratio: match complement {
                Some(c) => s.record.ratio(c),
                None => 1.0 - s.ratio,
            },
            normalized_loss: s.loss / reference,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferSlope {
    pub target_family: String,
    pub complement_family: String,
    /// Target ratio shared by the runs used.
    pub target_ratio: f64,
    pub slope: f64,
    pub intercept: f64,
    /// Half-width of the 95% confidence interval on the slope.
    pub half_width: f64,
    pub n_points: usize,
}

/// Least-squares slope of the target family's loss against the complement
/// family's ratio, over runs that share one target ratio. When several target
/// ratios occur, the one with the most runs is used (ties: smallest ratio).
pub fn transfer_slope(
    records: &[RunRecord],
    target_family: &str,
    complement_family: &str,
) -> Result<TransferSlope> {
    let groups = grouped(records, target_family);
    let group = groups
        .iter()
        .fold(None::<&Vec<Sample<'_>>>, |best, g| match best {
            Some(b) if b.len() >= g.len() => Some(b),
            _ => Some(g),
        })
        .ok_or_else(|| Error::InsufficientVariation(format!("no runs report `{target_family}`")))?;

    let xs: Vec<f64> = group
        .iter()
        .map(|s| s.record.ratio(complement_family))
        .collect();
    let ys: Vec<f64> = group.iter().map(|s| s.loss).collect();
    let mut distinct = xs.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup_by(|a, b| (*a - *b).abs() <= RATIO_EPS);
    if group.len() < 3 || distinct.len() < 2 {
        return Err(Error::InsufficientVariation(format!(
            "need at least 3 runs with `{target_family}` fixed and varying `{complement_family}`, found {} runs over {} distinct ratios",
            group.len(),
            distinct.len()
        )));
    }

    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    // Centering y on its first value keeps constant responses at an exact
    // zero slope.
    let y0 = ys[0];
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - y0)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let dof = k - 2.0;
    let half_width = if dof > 0.0 && sse > 0.0 {
        let se = (sse / dof / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, dof)
            .map_err(|e| Error::Degenerate(e.to_string()))?
            .inverse_cdf(0.975);
        t * se
    } else {
        0.0
    };
    Ok(TransferSlope {
        target_family: target_family.to_string(),
        complement_family: complement_family.to_string(),
        target_ratio: group[0].ratio,
        slope,
        intercept,
        half_width,
        n_points: group.len(),
    })
}
