//! Training-run records and their JSON Lines encoding.
//!
//! One line per run:
//!
//! ```text
//! {"run_id": "r1", "n_millions": 85, "d_billions": 50,
//!  "mixture": {"Romance": 0.5, "Slavic": 0.5},
//!  "losses": {"Romance": 2.61, "Slavic": 1.58}}
//! ```

use std::io::{BufRead, Write};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::MixtureVector;

/// One training run and its observed per-family test losses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRecord", into = "RawRecord")]
pub struct RunRecord {
    pub run_id: String,
    /// Millions of non-embedding parameters.
    pub model_size_n: f64,
    /// Billions of training tokens.
    pub data_size_d: f64,
    pub mixture: MixtureVector,
    /// Observed cross-entropy per family, nats per token.
    pub losses: IndexMap<String, f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    run_id: String,
    n_millions: f64,
    d_billions: f64,
    mixture: MixtureVector,
    losses: IndexMap<String, f64>,
}

impl TryFrom<RawRecord> for RunRecord {
    type Error = Error;

    fn try_from(raw: RawRecord) -> Result<Self> {
        RunRecord::new(
            raw.run_id,
            raw.n_millions,
            raw.d_billions,
            raw.mixture,
            raw.losses,
        )
    }
}

impl From<RunRecord> for RawRecord {
    fn from(r: RunRecord) -> Self {
        RawRecord {
            run_id: r.run_id,
            n_millions: r.model_size_n,
            d_billions: r.data_size_d,
            mixture: r.mixture,
            losses: r.losses,
        }
    }
}

impl RunRecord {
    pub fn new(
        run_id: impl Into<String>,
        model_size_n: f64,
        data_size_d: f64,
        mixture: MixtureVector,
        losses: IndexMap<String, f64>,
    ) -> Result<Self> {
        let record = Self {
            run_id: run_id.into(),
            model_size_n,
            data_size_d,
            mixture,
            losses,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::InvalidRecord {
            run_id: self.run_id.clone(),
            reason,
        };
        if !(self.model_size_n > 0.0 && self.model_size_n.is_finite()) {
            return Err(bad(format!(
                "n_millions must be > 0, got {}",
                self.model_size_n
            )));
        }
        if !(self.data_size_d > 0.0 && self.data_size_d.is_finite()) {
            return Err(bad(format!(
                "d_billions must be > 0, got {}",
                self.data_size_d
            )));
        }
        for (family, &loss) in &self.losses {
            if !(loss > 0.0 && loss.is_finite()) {
                return Err(bad(format!("loss for `{family}` must be > 0, got {loss}")));
            }
            if !self.mixture.contains(family) {
                return Err(bad(format!(
                    "loss reported for `{family}` which is not in the mixture"
                )));
            }
        }
        Ok(())
    }

    /// Sampling ratio of `family`, zero when absent from the mixture.
    pub fn ratio(&self, family: &str) -> f64 {
        self.mixture.get(family).unwrap_or(0.0)
    }

    pub fn loss(&self, family: &str) -> Option<f64> {
        self.losses.get(family).copied()
    }
}

/// Reads JSON Lines records. Blank lines are skipped; parse and validation
/// errors carry the 1-based line number.
pub fn read_records_jsonl<R: BufRead>(reader: R) -> Result<Vec<RunRecord>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| Error::parse(&e, idx))?;
        let run_id = raw.run_id.clone();
        let record = RunRecord::try_from(raw).map_err(|e| Error::InvalidRecord {
            run_id,
            reason: format!("line {}: {}", idx + 1, e),
        })?;
        out.push(record);
    }
    if out.is_empty() {
        return Err(Error::InsufficientData("no run records found".into()));
    }
    Ok(out)
}

pub fn write_records_jsonl<W: Write>(mut writer: W, records: &[RunRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}
