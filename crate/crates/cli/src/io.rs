use std::io::{BufReader, Read, Write};
use std::path::Path;

use mixlaw_core::{read_records_jsonl, RunRecord};
use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::{CliError, CliResult};

fn is_stdin(path: &Path) -> bool {
    path.as_os_str() == "-"
}

pub fn read_text(path: &Path) -> CliResult<String> {
    let read_err = |source| CliError::Read {
        path: path.display().to_string(),
        source,
    };
    if is_stdin(path) {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(read_err)?;
        Ok(buf)
    } else {
        std::fs::read_to_string(path).map_err(read_err)
    }
}

pub fn read_records(path: &Path) -> CliResult<Vec<RunRecord>> {
    let records = if is_stdin(path) {
        read_records_jsonl(std::io::stdin().lock())?
    } else {
        let file = std::fs::File::open(path).map_err(|source| CliError::Read {
            path: path.display().to_string(),
            source,
        })?;
        read_records_jsonl(BufReader::new(file))?
    };
    log::info!("read {} records from {}", records.len(), path.display());
    Ok(records)
}

/// Writes `bytes` to `out`, or stdout when absent. Files are written to a
/// sibling temporary and renamed into place, so a failed run leaves nothing
/// behind.
pub fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    let Some(path) = out else {
        let mut stdout = std::io::stdout().lock();
        return stdout
            .write_all(bytes)
            .and_then(|_| stdout.flush())
            .map_err(|source| CliError::Write {
                path: "<stdout>".into(),
                source,
            });
    };
    let write_err = |source| CliError::Write {
        path: path.display().to_string(),
        source,
    };
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(parent).map_err(write_err)?;
    tmp.write_all(bytes).map_err(write_err)?;
    tmp.as_file().sync_all().map_err(write_err)?;
    tmp.persist(path).map_err(|e| write_err(e.error))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

pub fn json_bytes<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Serializes `rows` under `header` as CSV.
pub fn csv_bytes<R: Serialize>(header: &[&str], rows: &[R]) -> CliResult<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| CliError::Write {
        path: "<buffer>".into(),
        source: e.into_error(),
    })
}
