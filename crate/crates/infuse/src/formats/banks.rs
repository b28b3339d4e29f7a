use std::collections::BTreeMap;
use std::path::Path;

use infuse_core::{BankKind, TemplateBank};
use serde::{Deserialize, Serialize};

use super::{read_json, write_json};
use crate::error::Result;

/// JSON shape of a template bank: `{"kind": "infusion"|"question", "entries": {relation: [template, ...]}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BankFile {
    pub kind: BankKind,
    pub entries: BTreeMap<String, Vec<String>>,
}

pub fn load_bank(path: &Path) -> Result<TemplateBank> {
    let raw: BankFile = read_json(path)?;
    Ok(TemplateBank::new(raw.kind, raw.entries)?)
}

pub fn write_bank(path: &Path, bank: &TemplateBank) -> Result<()> {
    write_json(path, &BankFile { kind: bank.kind(), entries: bank.entries().clone() })
}

/// Bundled banks by name: `default`, `diverse`, `questions`, `article-questions`.
pub fn bundled_bank(name: &str) -> Option<TemplateBank> {
    Some(match name {
        "default" => TemplateBank::default_infusion(),
        "diverse" => TemplateBank::diverse_infusion(),
        "questions" => TemplateBank::default_questions(),
        "article-questions" => TemplateBank::article_questions(),
        _ => return None,
    })
}

pub const BUNDLED_BANKS: [&str; 4] = ["default", "diverse", "questions", "article-questions"];
