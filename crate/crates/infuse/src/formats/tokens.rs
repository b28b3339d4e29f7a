//! Token counting: whitespace by default, or counts from an external tokenizer
//! supplied as a sidecar JSONL of `{"text_sha256": ..., "tokens": ...}` rows.

use std::collections::HashMap;
use std::path::Path;

use infuse_core::text::{TokenCounter, WhitespaceTokens};
use serde::{Deserialize, Serialize};

use super::read_jsonl;
use crate::digest::sha256_hex;
use crate::error::Result;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SidecarRow {
    pub text_sha256: String,
    pub tokens: u64,
}

#[derive(Debug, Clone, Default)]
pub enum Tokenizer {
    #[default]
    Whitespace,
    /// Texts missing from the sidecar fall back to whitespace counting.
    Sidecar(HashMap<String, u64>),
}

impl Tokenizer {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Tokenizer::Whitespace) };
        let rows: Vec<SidecarRow> = read_jsonl(path)?;
        Ok(Tokenizer::Sidecar(rows.into_iter().map(|r| (r.text_sha256, r.tokens)).collect()))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Tokenizer::Whitespace => "whitespace",
            Tokenizer::Sidecar(_) => "sidecar",
        }
    }
}

impl TokenCounter for Tokenizer {
    fn count(&self, text: &str) -> u64 {
        match self {
            Tokenizer::Whitespace => WhitespaceTokens.count(text),
            Tokenizer::Sidecar(map) => map.get(&sha256_hex(text.as_bytes())).copied().unwrap_or_else(|| WhitespaceTokens.count(text)),
        }
    }
}
