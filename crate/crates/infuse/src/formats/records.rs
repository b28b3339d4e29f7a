//! Run records as CSV with header `N,D,F,mr,n_items`.

use std::fs::OpenOptions;
use std::path::Path;

use infuse_core::RunRecord;

use super::open;
use crate::error::{Error, Result};

/// Load records. If any `mr` exceeds 1.5 the column is read as percent and
/// rescaled, with a warning.
pub fn load_records(path: &Path) -> Result<(Vec<RunRecord>, Vec<String>)> {
    let mut reader = csv::Reader::from_reader(open(path)?);
    let mut rows = Vec::new();
    for (i, row) in reader.deserialize::<RunRecord>().enumerate() {
        // header is line 1
        rows.push(row.map_err(|e| Error::parse(path, i + 2, e))?);
    }
    let mut warnings = Vec::new();
    let mut mrs: Vec<f64> = rows.iter().map(|r| r.mr).collect();
    if infuse_core::fit::normalize_percent(&mut mrs) {
        warnings.push(format!("{}: mr values look like percentages; divided by 100", path.display()));
        for (r, v) in rows.iter_mut().zip(mrs) {
            r.mr = v;
        }
    }
    for (i, r) in rows.iter().enumerate() {
        r.validate().map_err(|e| Error::parse(path, i + 2, e))?;
    }
    Ok((rows, warnings))
}

pub fn serialize_records(rows: &[RunRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

/// Append one record, writing the header first when the file is new or empty.
pub fn append_record(path: &Path, record: &RunRecord) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new().create(true).append(true).open(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    w.serialize(record).map_err(|e| Error::Invalid(e.to_string()))?;
    w.flush().map_err(|e| Error::io(path, e))
}
