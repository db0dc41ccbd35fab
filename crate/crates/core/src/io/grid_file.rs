//! Grid files (TOML) and benchmark metric tables (CSV).
//!
//! ```toml
//! [settings]
//! trees = 20
//! burn_in = 1000
//! draws = 1000
//! replicates = 10
//! seed = 1
//!
//! [[scenario]]
//! equation = "product"          # or: expression = "x1*x2", ranges = [[1, 3], [1, 3]]
//! n = [500, 1000]
//! snr = [1, 10, "noiseless"]
//! s = 50
//! methods = ["dart-vc-measure", "bart-vc-measure"]
//! l_rep = [1, 2, 5]             # optional prefix evaluation
//! ```

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use crate::benchmark::{AggregateRow, GridFile, MetricsRow};
use crate::error::{Error, Result};

pub fn parse_grid(src: &str, path: &Path) -> Result<GridFile> {
    toml::from_str(src).map_err(|e| {
        let line = e
            .span()
            .map_or(0, |s| src[..s.start.min(src.len())].matches('\n').count() as u64 + 1);
        Error::Parse {
            path: path.to_path_buf(),
            line,
            message: e.message().to_string(),
        }
    })
}

pub fn read_grid(path: &Path) -> Result<GridFile> {
    parse_grid(&std::fs::read_to_string(path)?, path)
}

pub fn write_rows<T: serde::Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    write_rows(path, rows)
}

pub fn write_aggregate(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    write_rows(path, rows)
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Rows of an append-only progress file. A torn final record (from an
/// interrupted write) is dropped; damage anywhere else is an error.
pub fn read_partial_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut r = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let records: Vec<_> = r.deserialize::<MetricsRow>().collect();
    let last = records.len().saturating_sub(1);
    let mut rows = Vec::with_capacity(records.len());
    for (i, rec) in records.into_iter().enumerate() {
        match rec {
            Ok(row) => rows.push(row),
            Err(_) if i == last => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(rows)
}

/// Appends finished rows to the progress file, writing the header if the
/// file is new or empty.
pub fn append_partial_metrics(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let fresh = std::fs::metadata(path).map_or(true, |m| m.len() == 0);
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    file.write_all(&bytes)?;
    file.flush()?;
    Ok(())
}
