//! Corpus manifests and per-language sampling schedules.
//!
//! A manifest lists languages (with token counts in billions) grouped into
//! families, plus optional caps on a language's share within its family.
//! Family-level mixtures are expanded to languages with temperature-style
//! smoothing inside each family.

use std::collections::HashSet;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::{ensure_same_families, MixtureVector};

pub const DEFAULT_WITHIN_FAMILY_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Language {
    pub code: String,
    pub tokens_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub id: String,
    pub languages: Vec<Language>,
    /// Replaces the summed token count in family-level baselines.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effective_tokens_b: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cap {
    pub family: String,
    pub language: String,
    /// Maximum share of the language within its family.
    pub max_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusManifest {
    pub families: Vec<FamilySpec>,
    #[serde(default)]
    pub caps: Vec<Cap>,
}

impl CorpusManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        let manifest: CorpusManifest =
            serde_json::from_str(text).map_err(|e| Error::parse(&e, 0))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidManifest(msg));
        if self.families.is_empty() {
            return bad("manifest lists no families".into());
        }
        let mut family_ids = HashSet::new();
        let mut codes = HashSet::new();
        for fam in &self.families {
            if !family_ids.insert(fam.id.as_str()) {
                return bad(format!("duplicate family `{}`", fam.id));
            }
            if fam.languages.is_empty() {
                return bad(format!("family `{}` has no languages", fam.id));
            }
            for lang in &fam.languages {
                if !codes.insert(lang.code.as_str()) {
                    return bad(format!("duplicate language code `{}`", lang.code));
                }
                if !(lang.tokens_b > 0.0 && lang.tokens_b.is_finite()) {
                    return bad(format!(
                        "token count for `{}` must be > 0, got {}",
                        lang.code, lang.tokens_b
                    ));
                }
            }
            if let Some(eff) = fam.effective_tokens_b {
                if !(eff > 0.0 && eff.is_finite()) {
                    return bad(format!(
                        "effective token count for `{}` must be > 0, got {eff}",
                        fam.id
                    ));
                }
            }
        }
        let mut capped = HashSet::new();
        for cap in &self.caps {
            let fam = self.family(&cap.family).map_err(|_| {
                Error::InvalidManifest(format!("cap refers to unknown family `{}`", cap.family))
            })?;
            if !fam.languages.iter().any(|l| l.code == cap.language) {
                return bad(format!(
                    "cap refers to `{}` which is not in family `{}`",
                    cap.language, cap.family
                ));
            }
            if !(cap.max_share > 0.0 && cap.max_share < 1.0) {
                return bad(format!(
                    "cap for `{}` must lie in (0, 1), got {}",
                    cap.language, cap.max_share
                ));
            }
            if !capped.insert(cap.language.as_str()) {
                return bad(format!("language `{}` capped twice", cap.language));
            }
        }
        Ok(())
    }

    pub fn family(&self, id: &str) -> Result<&FamilySpec> {
        self.families
            .iter()
            .find(|f| f.id == id)
            .ok_or_else(|| Error::UnknownFamily(id.to_string()))
    }

    pub fn family_ids(&self) -> impl Iterator<Item = &str> {
        self.families.iter().map(|f| f.id.as_str())
    }

    fn cap_for(&self, family: &str, code: &str) -> Option<f64> {
        self.caps
            .iter()
            .find(|c| c.family == family && c.language == code)
            .map(|c| c.max_share)
    }
}

pub fn load_manifest(path: &Path) -> Result<CorpusManifest> {
    let text = std::fs::read_to_string(path)?;
    CorpusManifest::from_json(&text)
}

/// Summed language token counts per family, or the family's override.
pub fn effective_family_tokens(manifest: &CorpusManifest) -> IndexMap<String, f64> {
    manifest
        .families
        .iter()
        .map(|f| {
            let total = f
                .effective_tokens_b
                .unwrap_or_else(|| f.languages.iter().map(|l| l.tokens_b).sum());
            (f.id.clone(), total)
        })
        .collect()
}

/// Rescales `weights` to sum to one while pinning any entry that would exceed
/// its cap to the cap. Repeats until no uncapped entry exceeds its cap.
pub fn apply_caps(
    family: &str,
    weights: &IndexMap<String, f64>,
    caps: &IndexMap<String, f64>,
) -> Result<IndexMap<String, f64>> {
    let all_capped_total: f64 = weights
        .keys()
        .map(|k| caps.get(k).copied().unwrap_or(f64::INFINITY))
        .sum();
    if all_capped_total < 1.0 {
        return Err(Error::InfeasibleCaps {
            family: family.to_string(),
            total: all_capped_total,
        });
    }
    let mut pinned: IndexMap<&str, f64> = IndexMap::new();
    for _ in 0..=weights.len() {
        let residual = 1.0 - pinned.values().sum::<f64>();
        let free_total: f64 = weights
            .iter()
            .filter(|(k, _)| !pinned.contains_key(k.as_str()))
            .map(|(_, &w)| w)
            .sum();
        let mut newly_pinned = false;
        for (k, &w) in weights {
            if pinned.contains_key(k.as_str()) {
                continue;
            }
            let share = residual * w / free_total;
            if let Some(&cap) = caps.get(k) {
                if share > cap {
                    pinned.insert(k.as_str(), cap);
                    newly_pinned = true;
                }
            }
        }
        if !newly_pinned {
            return Ok(weights
                .iter()
                .map(|(k, &w)| {
                    let share = match pinned.get(k.as_str()) {
                        Some(&cap) => cap,
                        None => residual * w / free_total,
                    };
                    (k.clone(), share)
                })
                .collect());
        }
    }
    unreachable!("each pass pins at least one more language")
}

/// Smoothed within-family proportions `q_i^alpha / sum_j q_j^alpha` with caps
/// applied.
pub fn within_family_ratios(
    manifest: &CorpusManifest,
    family: &str,
    alpha: f64,
) -> Result<IndexMap<String, f64>> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "smoothing exponent must be >= 0, got {alpha}"
        )));
    }
    let fam = manifest.family(family)?;
    let total: f64 = fam.languages.iter().map(|l| l.tokens_b).sum();
    let weights: IndexMap<String, f64> = fam
        .languages
        .iter()
        .map(|l| (l.code.clone(), (l.tokens_b / total).powf(alpha)))
        .collect();
    let caps: IndexMap<String, f64> = fam
        .languages
        .iter()
        .filter_map(|l| Some((l.code.clone(), manifest.cap_for(family, &l.code)?)))
        .collect();
    apply_caps(family, &weights, &caps)
}

/// Global sampling ratio per language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageSchedule {
    pub ratios: IndexMap<String, f64>,
}

impl LanguageSchedule {
    pub fn total(&self) -> f64 {
        self.ratios.values().sum()
    }
}

/// Language ratio = family ratio x within-family proportion.
pub fn expand_schedule(
    family_mixture: &MixtureVector,
    manifest: &CorpusManifest,
    alpha: f64,
) -> Result<LanguageSchedule> {
    ensure_same_families(manifest.family_ids(), family_mixture.families())?;
    let mut ratios = IndexMap::new();
    for fam in &manifest.families {
        let share = family_mixture.get(&fam.id).unwrap_or_default();
        for (code, within) in within_family_ratios(manifest, &fam.id, alpha)? {
            ratios.insert(code, share * within);
        }
    }
    Ok(LanguageSchedule { ratios })
}
