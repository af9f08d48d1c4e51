use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Allowed deviation of a mixture's total mass from 1.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Sampling ratios over language families, in caller-defined order.
///
/// Every ratio lies in `(0, 1]` and the ratios sum to one within
/// [`SIMPLEX_TOL`]. Families that should receive no data are simply absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IndexMap<String, f64>", into = "IndexMap<String, f64>")]
pub struct MixtureVector {
    ratios: IndexMap<String, f64>,
}

impl MixtureVector {
    pub fn new(ratios: IndexMap<String, f64>) -> Result<Self> {
        if ratios.is_empty() {
            return Err(Error::InvalidMixture("mixture has no families".into()));
        }
        let mut total = 0.0;
        for (family, &p) in &ratios {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidMixture(format!(
                    "ratio for `{family}` must lie in (0, 1], got {p}"
                )));
            }
            total += p;
        }
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidMixture(format!(
                "ratios sum to {total}, expected 1"
            )));
        }
        Ok(Self { ratios })
    }

    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut ratios = IndexMap::new();
        for (family, p) in pairs {
            let family = family.into();
            if ratios.insert(family.clone(), p).is_some() {
                return Err(Error::InvalidMixture(format!(
                    "duplicate family `{family}`"
                )));
            }
        }
        Self::new(ratios)
    }

    /// Builds a mixture by normalizing strictly positive weights.
    pub fn from_weights<I, S>(weights: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut map: IndexMap<String, f64> = IndexMap::new();
        for (family, w) in weights {
            let family = family.into();
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidMixture(format!(
                    "weight for `{family}` must be positive and finite, got {w}"
                )));
            }
            if map.insert(family.clone(), w).is_some() {
                return Err(Error::InvalidMixture(format!(
                    "duplicate family `{family}`"
                )));
            }
        }
        let total: f64 = map.values().sum();
        for w in map.values_mut() {
            *w /= total;
        }
        Self::new(map)
    }

    pub fn uniform<I, S>(families: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = families.into_iter().map(Into::into).collect();
        let share = 1.0 / names.len() as f64;
        Self::from_pairs(names.into_iter().map(|f| (f, share)))
    }

    pub fn get(&self, family: &str) -> Option<f64> {
        self.ratios.get(family).copied()
    }

    pub fn families(&self) -> impl Iterator<Item = &str> {
        self.ratios.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.ratios.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.ratios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratios.is_empty()
    }

    pub fn as_map(&self) -> &IndexMap<String, f64> {
        &self.ratios
    }

    pub fn contains(&self, family: &str) -> bool {
        self.ratios.contains_key(family)
    }
}

impl TryFrom<IndexMap<String, f64>> for MixtureVector {
    type Error = Error;

    fn try_from(ratios: IndexMap<String, f64>) -> Result<Self> {
        Self::new(ratios)
    }
}

impl From<MixtureVector> for IndexMap<String, f64> {
    fn from(m: MixtureVector) -> Self {
        m.ratios
    }
}

/// Non-negative per-family weights of the scalarized total loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IndexMap<String, f64>", into = "IndexMap<String, f64>")]
pub struct PreferenceVector {
    weights: IndexMap<String, f64>,
}

impl PreferenceVector {
    pub fn new(weights: IndexMap<String, f64>) -> Result<Self> {
        let mut any_positive = false;
        for (family, &w) in &weights {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidPreference(format!(
                    "weight for `{family}` must be finite and non-negative, got {w}"
                )));
            }
            any_positive |= w > 0.0;
        }
        if !any_positive {
            return Err(Error::InvalidPreference(
                "at least one weight must be positive".into(),
            ));
        }
        Ok(Self { weights })
    }

    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut weights = IndexMap::new();
        for (family, w) in pairs {
            let family = family.into();
            if weights.insert(family.clone(), w).is_some() {
                return Err(Error::InvalidPreference(format!(
                    "duplicate family `{family}`"
                )));
            }
        }
        Self::new(weights)
    }

    /// All weights equal to one.
    pub fn unweighted<I, S>(families: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::from_pairs(families.into_iter().map(|f| (f, 1.0)))
    }

    pub fn get(&self, family: &str) -> Option<f64> {
        self.weights.get(family).copied()
    }

    pub fn families(&self) -> impl Iterator<Item = &str> {
        self.weights.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.weights.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Multiplies every weight by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.weights
                .iter()
                .map(|(k, &w)| (k.clone(), w * factor))
                .collect(),
        )
    }
}

impl TryFrom<IndexMap<String, f64>> for PreferenceVector {
    type Error = Error;

    fn try_from(weights: IndexMap<String, f64>) -> Result<Self> {
        Self::new(weights)
    }
}

impl From<PreferenceVector> for IndexMap<String, f64> {
    fn from(p: PreferenceVector) -> Self {
        p.weights
    }
}

/// Checks that two family name collections contain exactly the same names.
pub(crate) fn ensure_same_families<'a, A, B>(expected: A, found: B) -> Result<()>
where
    A: IntoIterator<Item = &'a str>,
    B: IntoIterator<Item = &'a str>,
{
    let mut e: Vec<String> = expected.into_iter().map(str::to_owned).collect();
    let mut f: Vec<String> = found.into_iter().map(str::to_owned).collect();
    e.sort();
    f.sort();
    if e != f {
        return Err(Error::FamilyMismatch {
            expected: e,
            found: f,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_off_simplex() {
        assert!(MixtureVector::from_pairs([("a", 0.5), ("b", 0.4)]).is_err());
        assert!(MixtureVector::from_pairs([("a", 1.2), ("b", -0.2)]).is_err());
        assert!(MixtureVector::from_pairs([("a", 0.0), ("b", 1.0)]).is_err());
        assert!(MixtureVector::from_pairs([("a", 0.5), ("a", 0.5)]).is_err());
    }

    #[test]
    fn weights_are_normalized() {
        let m = MixtureVector::from_weights([("a", 3.0), ("b", 1.0)]).unwrap();
        assert_eq!(m.get("a"), Some(0.75));
        assert_eq!(m.get("b"), Some(0.25));
    }

    #[test]
    fn uniform_over_five() {
        let m = MixtureVector::uniform(["a", "b", "c", "d", "e"]).unwrap();
        assert!(m.iter().all(|(_, p)| (p - 0.2).abs() < 1e-15));
    }

    #[test]
    fn preference_requires_positive_weight() {
        assert!(PreferenceVector::from_pairs([("a", 0.0), ("b", 0.0)]).is_err());
        assert!(PreferenceVector::from_pairs([("a", -1.0), ("b", 2.0)]).is_err());
        assert!(PreferenceVector::from_pairs([("a", 0.0), ("b", 2.0)]).is_ok());
    }

    #[test]
    fn json_preserves_order_and_validates() {
        let m: MixtureVector = serde_json::from_str(r#"{"z":0.5,"a":0.5}"#).unwrap();
        assert_eq!(m.families().collect::<Vec<_>>(), ["z", "a"]);
        assert!(serde_json::from_str::<MixtureVector>(r#"{"z":0.5,"a":0.6}"#).is_err());
    }
}
