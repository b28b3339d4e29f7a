use std::io::BufRead;
use std::path::Path;

use infuse_core::{KnowledgeTriple, RelationRegistry, TripleSet};
use serde::{Deserialize, Serialize};

use super::{open, write_string};
use crate::digest::file_sha256;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TripleFormat {
    Tsv,
    Jsonl,
}

impl TripleFormat {
    /// `.tsv` and `.txt` are TSV, everything else JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv" | "txt") => TripleFormat::Tsv,
            _ => TripleFormat::Jsonl,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Row<'a> {
    subject: std::borrow::Cow<'a, str>,
    relation: std::borrow::Cow<'a, str>,
    object: std::borrow::Cow<'a, str>,
}

/// Load triples in file order. Unknown relations are rejected unless `permissive`.
/// The set's provenance is the SHA-256 of the file.
pub fn load_triples(path: &Path, format: TripleFormat, registry: &RelationRegistry, permissive: bool) -> Result<TripleSet> {
    let reader = open(path)?;
    let mut triples = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let (s, r, o) = match format {
            TripleFormat::Tsv => {
                let fields: Vec<&str> = line.split('\t').collect();
                if fields.len() != 3 {
                    return Err(Error::parse(path, line_no, format!("expected 3 tab-separated fields, found {}", fields.len())));
                }
                (fields[0].to_string(), fields[1].to_string(), fields[2].to_string())
            }
            TripleFormat::Jsonl => {
                let row: Row = serde_json::from_str(line).map_err(|e| Error::parse(path, line_no, e))?;
                (row.subject.into_owned(), row.relation.into_owned(), row.object.into_owned())
            }
        };
        let t = if permissive {
            KnowledgeTriple::parse_permissive(&s, &r, &o)
        } else {
            KnowledgeTriple::parse(&s, &r, &o, registry)
        };
        triples.push(t.map_err(|e| Error::parse(path, line_no, e))?);
    }
    if triples.is_empty() {
        return Err(Error::EmptyDataset(path.to_path_buf()));
    }
    let mut ts = TripleSet::new(triples);
    ts.provenance = Some(file_sha256(path)?);
    Ok(ts)
}

pub fn serialize_triples(ts: &TripleSet, format: TripleFormat) -> String {
    let mut out = String::new();
    for t in ts.iter() {
        match format {
            TripleFormat::Tsv => {
                out.push_str(&t.subject);
                out.push('\t');
                out.push_str(t.relation.as_str());
                out.push('\t');
                out.push_str(&t.object);
            }
            TripleFormat::Jsonl => {
                let row = Row {
                    subject: t.subject.as_str().into(),
                    relation: t.relation.as_str().into(),
                    object: t.object.as_str().into(),
                };
                out.push_str(&serde_json::to_string(&row).expect("serializable row"));
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_triples(path: &Path, ts: &TripleSet, format: TripleFormat) -> Result<()> {
    write_string(path, &serialize_triples(ts, format))
}
