#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use infuse::formats::corpus::Document;
use infuse_core::{BankKind, KnowledgeTriple, TemplateBank, TripleSet};
use rand::seq::IndexedRandom;
use rand::Rng;
use serde_json::Value;

pub const RELATIONS: [&str; 6] = ["capital", "color", "industry", "location", "material", "shape"];

pub fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

/// Lowercased maximal alphanumeric runs, written independently of the library.
pub fn oracle_words(text: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            cur.extend(c.to_lowercase());
        } else if !cur.is_empty() {
            out.insert(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.insert(cur);
    }
    out
}

/// Paragraphs split on lines that are empty or whitespace only.
pub fn oracle_paragraphs(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur: Vec<&str> = Vec::new();
    for line in text.split('\n') {
        if line.trim().is_empty() {
            if !cur.is_empty() {
                out.push(cur.join("\n"));
                cur.clear();
            }
        } else {
            cur.push(line);
        }
    }
    if !cur.is_empty() {
        out.push(cur.join("\n"));
    }
    out
}

/// Brute-force filter: test every (paragraph, triple) pair directly.
pub fn oracle_filter(docs: &[Document], ts: &TripleSet) -> Vec<Document> {
    let needs: Vec<BTreeSet<String>> = ts
        .iter()
        .map(|t| {
            let mut w = oracle_words(&t.subject);
            w.extend(oracle_words(t.relation.as_str()));
            w.extend(oracle_words(&t.object));
            w
        })
        .collect();
    docs.iter()
        .filter_map(|d| {
            let kept: Vec<String> = oracle_paragraphs(&d.text)
                .into_iter()
                .filter(|p| {
                    let words = oracle_words(p);
                    !needs.iter().any(|n| n.is_subset(&words))
                })
                .collect();
            (!kept.is_empty()).then(|| Document { id: d.id.clone(), text: kept.join("\n\n") })
        })
        .collect()
}

const VOCAB: [&str; 24] = [
    "glass", "bottle", "material", "red", "color", "apple", "Paris", "capital", "France", "shape", "round", "ball",
    "the", "of", "is", "a", "new", "york", "city", "río", "Ärger", "steel", "spoon", "42",
];

pub fn random_word<R: Rng>(rng: &mut R) -> String {
    let w = *VOCAB.choose(rng).unwrap();
    match rng.random_range(0..4) {
        0 => w.to_uppercase(),
        _ => w.to_string(),
    }
}

pub fn random_paragraph<R: Rng>(rng: &mut R) -> String {
    let n = rng.random_range(1..12);
    let mut s = String::new();
    for i in 0..n {
        if i > 0 {
            s.push_str([" ", " ", ", ", "-", "\n", "  "].choose(rng).unwrap());
        }
        s.push_str(&random_word(rng));
    }
    if rng.random_bool(0.3) {
        s.push('.');
    }
    s
}

/// Documents with varied paragraph separators (one or more blank or whitespace-only lines).
pub fn random_corpus<R: Rng>(rng: &mut R, paragraphs: usize) -> Vec<Document> {
    let mut docs = Vec::new();
    let mut left = paragraphs;
    while left > 0 {
        let k = rng.random_range(1..=left.min(12));
        let mut text = String::new();
        for i in 0..k {
            if i > 0 {
                text.push_str(["\n\n", "\n\n\n", "\n \n", "\n\t\n\n"].choose(rng).unwrap());
            }
            text.push_str(&random_paragraph(rng));
        }
        let id = match rng.random_range(0..3) {
            0 => Value::from(docs.len() as u64),
            1 => Value::from(format!("doc-{}", docs.len())),
            _ => serde_json::json!({ "shard": docs.len() % 3, "n": docs.len() }),
        };
        docs.push(Document { id, text });
        left -= k;
    }
    docs
}

pub fn random_triples<R: Rng>(rng: &mut R, n: usize) -> TripleSet {
    let phrase = |rng: &mut R| {
        let k = rng.random_range(1..3);
        (0..k).map(|_| random_word(rng)).collect::<Vec<_>>().join(" ")
    };
    TripleSet::new(
        (0..n)
            .map(|_| {
                let rel = *RELATIONS.choose(rng).unwrap();
                KnowledgeTriple::parse_permissive(&phrase(rng), rel, &phrase(rng)).unwrap()
            })
            .collect(),
    )
}

/// Triples with unique, non-overlapping names so statements never collide.
pub fn distinct_triples(n: usize) -> TripleSet {
    TripleSet::new(
        (0..n)
            .map(|i| {
                let rel = RELATIONS[i % RELATIONS.len()];
                KnowledgeTriple::parse_permissive(&format!("zq{i}x"), rel, &format!("vw{i}y")).unwrap()
            })
            .collect(),
    )
}

/// An infusion bank with `k` numbered templates per default relation.
pub fn numbered_bank(k: usize) -> TemplateBank {
    TemplateBank::new(
        BankKind::Infusion,
        RELATIONS.iter().map(|r| (r.to_string(), (0..k).map(|i| format!("Variant {i}: the {r} of {{subject}} is {{object}}.")).collect::<Vec<_>>())),
    )
    .unwrap()
}

pub fn write_corpus(path: &Path, docs: &[Document]) {
    let text: String = docs.iter().map(Document::to_line).collect();
    std::fs::write(path, text).unwrap();
}

pub fn read_corpus(path: &Path) -> Vec<Document> {
    infuse::formats::corpus::read_documents(path).unwrap()
}
