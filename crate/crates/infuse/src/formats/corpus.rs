//! Corpus JSONL: one `{"id": ..., "text": ...}` document per line.

use std::io::{BufRead, Lines};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::open;
use crate::error::{Error, Result};

/// Documents per parallel batch.
pub const BATCH_DOCS: usize = 2048;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    /// Passed through untouched, whatever its JSON type.
    pub id: Value,
    pub text: String,
}

impl Document {
    pub fn parse(path: &Path, line_no: usize, line: &str) -> Result<Self> {
        serde_json::from_str(line).map_err(|e| Error::parse(path, line_no, e))
    }

    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("serializable document");
        s.push('\n');
        s
    }
}

/// Raw lines of a corpus file in fixed-size batches, tagged with line numbers.
/// Blank lines are skipped.
pub struct Batches {
    path: PathBuf,
    lines: Lines<std::io::BufReader<std::fs::File>>,
    line_no: usize,
    batch: usize,
}

impl Batches {
    pub fn open(path: &Path, batch: usize) -> Result<Self> {
        Ok(Self { path: path.to_path_buf(), lines: open(path)?.lines(), line_no: 0, batch: batch.max(1) })
    }
}

impl Iterator for Batches {
    type Item = Result<Vec<(usize, String)>>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut out = Vec::with_capacity(self.batch);
        while out.len() < self.batch {
            match self.lines.next() {
                None => break,
                Some(Ok(line)) => {
                    self.line_no += 1;
                    if !line.trim().is_empty() {
                        out.push((self.line_no, line));
                    }
                }
                Some(Err(e)) => return Some(Err(Error::io(&self.path, e))),
            }
        }
        (!out.is_empty()).then_some(Ok(out))
    }
}

pub fn read_documents(path: &Path) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for batch in Batches::open(path, BATCH_DOCS)? {
        for (n, line) in batch? {
            docs.push(Document::parse(path, n, &line)?);
        }
    }
    Ok(docs)
}
