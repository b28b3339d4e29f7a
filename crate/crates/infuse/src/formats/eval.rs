use std::collections::BTreeMap;
use std::path::Path;

use infuse_core::{EvalItem, OptionScores};
use serde::{Deserialize, Serialize};

use super::read_jsonl;
use crate::error::{Error, Result};

pub fn load_eval(path: &Path) -> Result<Vec<EvalItem>> {
    let items: Vec<EvalItem> = read_jsonl(path)?;
    if items.is_empty() {
        return Err(Error::EmptyDataset(path.to_path_buf()));
    }
    for it in &items {
        if !it.is_well_formed() {
            return Err(Error::Invalid(format!("{}: item {} is malformed", path.display(), it.triple_id)));
        }
    }
    Ok(items)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistractorRow {
    pub triple_id: usize,
    pub distractors: Vec<String>,
}

/// Distractors keyed by triple id. A repeated id is an error.
pub fn load_distractors(path: &Path) -> Result<BTreeMap<usize, Vec<String>>> {
    let rows: Vec<DistractorRow> = read_jsonl(path)?;
    let mut map = BTreeMap::new();
    for r in rows {
        let id = r.triple_id;
        if map.insert(id, r.distractors).is_some() {
            return Err(Error::Invalid(format!("{}: triple {id} listed twice", path.display())));
        }
    }
    Ok(map)
}

pub fn load_scores(path: &Path) -> Result<Vec<OptionScores>> {
    read_jsonl(path)
}
