//! Evaluation of the multilingual scaling law.
//!
//! For a language family `i` trained with sampling ratio `p` on a model of
//! `n` million non-embedding parameters and `d` billion tokens, the predicted
//! test cross-entropy (nats per token) is
//!
//! ```text
//! L_i(n, d, p) = (E_i + A_i / n^alpha_i + B_i / d^beta_i) * p^(-gamma_i)
//! ```
//!
//! The prefactor is the mono-family loss `L*_i(n, d)`, the loss obtained when
//! the family makes up the whole training mixture. At a fixed model and data
//! size the law reduces to the two-parameter power law `L*_i * p^(-gamma_i)`.
//!
//! Sampling ratios must lie in `(0, 1]`; the law diverges at `p = 0` and is not
//! meaningful there, so a non-positive ratio is reported as a domain error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::{ensure_same_families, MixtureVector, PreferenceVector};

/// Upper bound accepted for the model- and data-size exponents.
pub const MAX_SIZE_EXPONENT: f64 = 2.5;
/// Upper bound accepted for the mixture decay exponent.
pub const MAX_DECAY_EXPONENT: f64 = 1.0;

/// Coefficients of the joint law for one language family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub family: String,
    /// Irreducible loss, nats per token.
    #[serde(rename = "E")]
    pub e: f64,
    /// Model-size coefficient.
    #[serde(rename = "A")]
    pub a: f64,
    /// Data-size coefficient.
    #[serde(rename = "B")]
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl FamilyParams {
    pub fn new(
        family: impl Into<String>,
        e: f64,
        a: f64,
        b: f64,
        alpha: f64,
        beta: f64,
        gamma: f64,
    ) -> Result<Self> {
        let params = Self {
            family: family.into(),
            e,
            a,
            b,
            alpha,
            beta,
            gamma,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::InvalidParams {
            family: self.family.clone(),
            reason,
        };
        if !(self.e >= 0.0 && self.e.is_finite()) {
            return Err(bad(format!("E must be finite and >= 0, got {}", self.e)));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(bad(format!("A must be finite and > 0, got {}", self.a)));
        }
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(bad(format!("B must be finite and > 0, got {}", self.b)));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v > 0.0 && v <= MAX_SIZE_EXPONENT) {
                return Err(bad(format!(
                    "{name} must lie in (0, {MAX_SIZE_EXPONENT}], got {v}"
                )));
            }
        }
        if !(self.gamma > 0.0 && self.gamma <= MAX_DECAY_EXPONENT) {
            return Err(bad(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        Ok(())
    }

    /// Mono-family loss `L*(n, d)`.
    pub fn mono_loss(&self, n: f64, d: f64) -> Result<f64> {
        mono_family_loss(self, n, d)
    }

    pub fn predict(&self, n: f64, d: f64, p: f64) -> Result<f64> {
        predict_family_loss(self, n, d, p)
    }

    /// Power law obtained by fixing model and data size.
    pub fn at_scale(&self, n: f64, d: f64) -> Result<PowerLawParams> {
        Ok(PowerLawParams {
            family: self.family.clone(),
            l_star: self.mono_loss(n, d)?,
            gamma: self.gamma,
        })
    }
}

/// Two-parameter power law in the sampling ratio at fixed model/data size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawParams {
    pub family: String,
    /// Loss when the family is the whole mixture, nats per token.
    pub l_star: f64,
    pub gamma: f64,
}

impl PowerLawParams {
    pub fn new(family: impl Into<String>, l_star: f64, gamma: f64) -> Result<Self> {
        let params = Self {
            family: family.into(),
            l_star,
            gamma,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l_star > 0.0 && self.l_star.is_finite()) {
            return Err(Error::InvalidParams {
                family: self.family.clone(),
                reason: format!("l_star must be finite and > 0, got {}", self.l_star),
            });
        }
        if !(self.gamma > 0.0 && self.gamma <= MAX_DECAY_EXPONENT) {
            return Err(Error::InvalidParams {
                family: self.family.clone(),
                reason: format!("gamma must lie in (0, 1], got {}", self.gamma),
            });
        }
        Ok(())
    }

    pub fn loss(&self, p: f64) -> Result<f64> {
        power_law_loss(self, p)
    }
}

/// Unit labels written alongside parameter files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Units {
    #[serde(rename = "N")]
    pub n: String,
    #[serde(rename = "D")]
    pub d: String,
    pub loss: String,
}

impl Default for Units {
    fn default() -> Self {
        Self {
            n: "millions_params".into(),
            d: "billions_tokens".into(),
            loss: "nats_per_token".into(),
        }
    }
}

/// On-disk form of a set of fitted joint-law coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsFile {
    #[serde(default)]
    pub units: Units,
    pub params: Vec<FamilyParams>,
}

impl ParamsFile {
    pub fn new(params: Vec<FamilyParams>) -> Self {
        Self {
            units: Units::default(),
            params,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ParamsFile = serde_json::from_str(text).map_err(|e| Error::parse(&e, 0))?;
        if file.units != Units::default() {
            return Err(Error::InvalidConfig(format!(
                "unsupported units {:?}; expected N=millions_params, D=billions_tokens, loss=nats_per_token",
                file.units
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for p in &file.params {
            p.validate()?;
            if !seen.insert(p.family.as_str()) {
                return Err(Error::InvalidParams {
                    family: p.family.clone(),
                    reason: "family listed twice".into(),
                });
            }
        }
        if file.params.is_empty() {
            return Err(Error::InsufficientData(
                "parameter file lists no families".into(),
            ));
        }
        Ok(file)
    }
}

fn check_ratio(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "sampling ratio must lie in (0, 1]",
            value: p,
        })
    }
}

fn check_size(what: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { what, value: v })
    }
}

/// `l_star * p^(-gamma)`.
pub fn power_law_loss(params: &PowerLawParams, p: f64) -> Result<f64> {
    check_ratio(p)?;
    Ok(params.l_star * p.powf(-params.gamma))
}

/// `E + A / n^alpha + B / d^beta`, with `n` in millions of parameters and `d`
/// in billions of tokens.
pub fn mono_family_loss(params: &FamilyParams, n: f64, d: f64) -> Result<f64> {
    check_size("model size must be positive", n)?;
    check_size("data size must be positive", d)?;
    Ok(params.e + params.a * n.powf(-params.alpha) + params.b * d.powf(-params.beta))
}

pub fn predict_family_loss(params: &FamilyParams, n: f64, d: f64, p: f64) -> Result<f64> {
    check_ratio(p)?;
    let mono = mono_family_loss(params, n, d)?;
    if p == 1.0 {
        return Ok(mono);
    }
    Ok(mono * p.powf(-params.gamma))
}

/// Family loss divided by its mono-family loss, i.e. `p^(-gamma)`.
pub fn normalized_family_loss(params: &FamilyParams, n: f64, d: f64, p: f64) -> Result<f64> {
    check_ratio(p)?;
    check_size("model size must be positive", n)?;
    check_size("data size must be positive", d)?;
    Ok(p.powf(-params.gamma))
}

/// Preference-weighted sum of predicted family losses.
pub fn predict_total_loss(
    all_params: &[FamilyParams],
    prefs: &PreferenceVector,
    n: f64,
    d: f64,
    mixture: &MixtureVector,
) -> Result<f64> {
    ensure_same_families(
        all_params.iter().map(|p| p.family.as_str()),
        mixture.families(),
    )?;
    ensure_same_families(mixture.families(), prefs.families())?;
    let mut total = 0.0;
    for params in all_params {
        // Membership was checked above.
        let p = mixture.get(&params.family).unwrap_or_default();
        let w = prefs.get(&params.family).unwrap_or_default();
        total += w * predict_family_loss(params, n, d, p)?;
    }
    Ok(total)
}

/// Looks up the parameters for `family` by exact name.
pub fn find_family<'a>(all_params: &'a [FamilyParams], family: &str) -> Result<&'a FamilyParams> {
    all_params
        .iter()
        .find(|p| p.family == family)
        .ok_or_else(|| Error::UnknownFamily(family.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn romance() -> FamilyParams {
        FamilyParams::new("Romance", 1.303, 2.509, 2.186, 0.229, 0.557, 0.078).unwrap()
    }

    #[test]
    fn power_law_identity_and_trivial_value() {
        let pl = PowerLawParams::new("Romance", 2.186, 0.080).unwrap();
        assert_eq!(power_law_loss(&pl, 1.0).unwrap(), 2.186);
        let unit = PowerLawParams::new("x", 1.0, 0.5).unwrap();
        assert!((power_law_loss(&unit, 0.25).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn power_law_rejects_non_positive_ratio() {
        let pl = PowerLawParams::new("x", 1.0, 0.5).unwrap();
        assert!(matches!(
            power_law_loss(&pl, 0.0),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            power_law_loss(&pl, -0.1),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            power_law_loss(&pl, 1.5),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn irreducible_only_limit() {
        // A = B = 0 is outside the validated range, but the formula still applies.
        let flat = FamilyParams {
            family: "flat".into(),
            e: 1.5,
            a: 0.0,
            b: 0.0,
            alpha: 0.3,
            beta: 0.3,
            gamma: 0.1,
        };
        assert_eq!(mono_family_loss(&flat, 7.0, 1234.0).unwrap(), 1.5);
    }

    #[test]
    fn mono_loss_rejects_bad_sizes() {
        let r = romance();
        assert!(mono_family_loss(&r, 0.0, 50.0).is_err());
        assert!(mono_family_loss(&r, 85.0, -1.0).is_err());
        assert!(predict_family_loss(&r, 85.0, 50.0, 0.0).is_err());
    }

    #[test]
    fn unit_ratio_is_exact_identity() {
        let r = romance();
        assert_eq!(
            predict_family_loss(&r, 85.0, 50.0, 1.0).unwrap(),
            mono_family_loss(&r, 85.0, 50.0).unwrap()
        );
        assert_eq!(normalized_family_loss(&r, 85.0, 50.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn mismatched_families_rejected() {
        let params = vec![romance()];
        let prefs = PreferenceVector::unweighted(["Romance"]).unwrap();
        let mix = MixtureVector::uniform(["Slavic"]).unwrap();
        assert!(matches!(
            predict_total_loss(&params, &prefs, 85.0, 50.0, &mix),
            Err(Error::FamilyMismatch { .. })
        ));
    }

    #[test]
    fn validation_ranges() {
        assert!(FamilyParams::new("x", -0.1, 1.0, 1.0, 0.2, 0.2, 0.1).is_err());
        assert!(FamilyParams::new("x", 0.0, 0.0, 1.0, 0.2, 0.2, 0.1).is_err());
        assert!(FamilyParams::new("x", 0.0, 1.0, 1.0, 2.6, 0.2, 0.1).is_err());
        assert!(FamilyParams::new("x", 0.0, 1.0, 1.0, 0.2, 0.2, 1.1).is_err());
        assert!(FamilyParams::new("x", 0.0, 1.0, 1.0, 2.5, 2.5, 1.0).is_ok());
        assert!(PowerLawParams::new("x", 0.0, 0.1).is_err());
    }

    #[test]
    fn params_file_rejects_foreign_units() {
        let text = r#"{"units":{"N":"params","D":"tokens","loss":"bits"},"params":[]}"#;
        assert!(ParamsFile::from_json(text).is_err());
    }
}
