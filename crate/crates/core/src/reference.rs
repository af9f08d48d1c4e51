//! Reference coefficients and corpus manifest bundled with the crate.

use serde::Deserialize;

use crate::corpus::CorpusManifest;
use crate::error::{Error, Result};
use crate::law::{FamilyParams, ParamsFile, PowerLawParams};

const JOINT_PARAMS_JSON: &str = include_str!("../data/joint_params_v1.json");
const POWER_LAW_JSON: &str = include_str!("../data/power_law_397m_50b_v1.json");
const MANIFEST_JSON: &str = include_str!("../data/manifest_v1.json");

/// Family order used by the bundled data.
pub const REFERENCE_FAMILIES: [&str; 5] =
    ["Romance", "Slavic", "Indic", "Germanic", "Sino-Tibetan"];

/// Raw text of the bundled joint-law coefficients.
pub fn reference_params_json() -> &'static str {
    JOINT_PARAMS_JSON
}

/// Raw text of the bundled corpus manifest.
pub fn reference_manifest_json() -> &'static str {
    MANIFEST_JSON
}

pub fn reference_params() -> Vec<FamilyParams> {
    ParamsFile::from_json(JOINT_PARAMS_JSON)
        .expect("bundled parameters are valid")
        .params
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerLawReference {
    pub model_size_millions: f64,
    pub data_size_billions: f64,
    pub params: Vec<PowerLawParams>,
}

#[derive(Deserialize)]
struct RawPowerLawFile {
    model_size_millions: f64,
    data_size_billions: f64,
    params: Vec<PowerLawParams>,
}

/// Power-law coefficients fitted at a single (N, D).
pub fn reference_power_laws() -> PowerLawReference {
    parse_power_laws(POWER_LAW_JSON).expect("bundled power laws are valid")
}

fn parse_power_laws(text: &str) -> Result<PowerLawReference> {
    let raw: RawPowerLawFile = serde_json::from_str(text).map_err(|e| Error::parse(&e, 0))?;
    for p in &raw.params {
        p.validate()?;
    }
    Ok(PowerLawReference {
        model_size_millions: raw.model_size_millions,
        data_size_billions: raw.data_size_billions,
        params: raw.params,
    })
}

pub fn reference_manifest() -> CorpusManifest {
    CorpusManifest::from_json(MANIFEST_JSON).expect("bundled manifest is valid")
}
