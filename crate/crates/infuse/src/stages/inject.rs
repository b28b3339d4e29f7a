use std::io::Write;
use std::path::Path;

use infuse_core::inject::{budget_cutoff, interleave, plan_injection, CountVerifier, Schedule};
use infuse_core::text::{join_paragraphs, split_paragraphs, TokenCounter};
use infuse_core::{DiversityMode, InjectionPlan, InjectionReport, ManifestEntry, TemplateBank, TripleSet, VerifyOutcome};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::formats::corpus::{Batches, Document, BATCH_DOCS};
use crate::formats::create;
use crate::formats::tokens::Tokenizer;

/// Id of the document created when the base corpus contributes no documents.
pub const SYNTHETIC_DOC_ID: &str = "injected";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InjectOptions {
    pub frequency: usize,
    pub diversity: DiversityMode,
    pub seed: u64,
    pub budget_tokens: Option<u64>,
    pub strict_budget: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectOutcome {
    pub plan: InjectionPlan,
    pub report: InjectionReport,
    pub tokenizer: String,
    #[serde(skip)]
    pub manifest: Vec<ManifestEntry>,
}

struct DocShape {
    paragraphs: u64,
    tokens: u64,
}

fn scan(input: &Path, tokens: &Tokenizer, batch: usize) -> Result<Vec<DocShape>> {
    let mut shapes = Vec::new();
    for lines in Batches::open(input, batch)? {
        let lines = lines?;
        let part: Vec<Result<DocShape>> = lines
            .par_iter()
            .map(|(n, line)| {
                let doc = Document::parse(input, *n, line)?;
                let paras = split_paragraphs(&doc.text);
                Ok(DocShape { paragraphs: paras.len() as u64, tokens: paras.iter().map(|p| tokens.count(p)).sum() })
            })
            .collect();
        for s in part {
            shapes.push(s?);
        }
    }
    Ok(shapes)
}

/// Insert every triple's statements `frequency` times as standalone paragraphs.
///
/// Positions are drawn per statement over the `n + 1` gaps of the (possibly
/// budget-truncated) base corpus, so the output is fixed by the seed alone.
pub fn inject_corpus(
    triples: &TripleSet,
    bank: &TemplateBank,
    input: &Path,
    output: &Path,
    opts: &InjectOptions,
    tokens: &Tokenizer,
) -> Result<InjectOutcome> {
    inject_corpus_batched(triples, bank, input, output, opts, tokens, BATCH_DOCS)
}

pub fn inject_corpus_batched(
    triples: &TripleSet,
    bank: &TemplateBank,
    input: &Path,
    output: &Path,
    opts: &InjectOptions,
    tokens: &Tokenizer,
    batch: usize,
) -> Result<InjectOutcome> {
    let (mut plan, manifest) = plan_injection(triples, bank, opts.frequency, opts.diversity, opts.seed)?;
    plan.budget_tokens = opts.budget_tokens;
    let mut report = InjectionReport::from_manifest(&manifest, triples.len(), tokens, opts.seed);

    let shapes = scan(input, tokens, batch)?;
    let kept_docs = match opts.budget_tokens {
        Some(budget) => {
            let doc_tokens: Vec<u64> = shapes.iter().map(|s| s.tokens).collect();
            budget_cutoff(&doc_tokens, report.total_tokens, budget, opts.strict_budget)?
        }
        None => shapes.len(),
    };
    let mut offsets = Vec::with_capacity(kept_docs);
    let mut n = 0u64;
    for s in &shapes[..kept_docs] {
        offsets.push(n);
        n += s.paragraphs;
        report.base_tokens += s.tokens;
    }
    report.base_paragraphs = n;
    report.documents_dropped_for_budget = (shapes.len() - kept_docs) as u64;
    let schedule = Schedule::new(manifest.len(), n, opts.seed);

    let mut out = create(output)?;
    let mut write = |line: &str| out.write_all(line.as_bytes()).map_err(|e| Error::io(output, e));
    if kept_docs == 0 {
        let texts = interleave(&[], 0, true, &schedule, &manifest);
        if !texts.is_empty() {
            write(&Document { id: Value::from(SYNTHETIC_DOC_ID), text: join_paragraphs(&texts) }.to_line())?;
        }
    } else {
        let mut doc_index = 0usize;
        for lines in Batches::open(input, batch)? {
            let lines = lines?;
            let take = lines.len().min(kept_docs.saturating_sub(doc_index));
            let rendered: Vec<Result<String>> = lines[..take]
                .par_iter()
                .enumerate()
                .map(|(j, (line_no, line))| {
                    let i = doc_index + j;
                    let doc = Document::parse(input, *line_no, line)?;
                    let paras = split_paragraphs(&doc.text);
                    let merged = interleave(&paras, offsets[i], i + 1 == kept_docs, &schedule, &manifest);
                    // Documents without paragraphs and without statements pass through verbatim.
                    let text = if merged.is_empty() { doc.text.clone() } else { join_paragraphs(&merged) };
                    Ok(Document { id: doc.id, text }.to_line())
                })
                .collect();
            for r in rendered {
                write(&r?)?;
            }
            doc_index += take;
            if doc_index >= kept_docs {
                break;
            }
        }
    }
    out.flush().map_err(|e| Error::io(output, e))?;
    Ok(InjectOutcome { plan, report, tokenizer: tokens.name().to_string(), manifest })
}

/// Count how often each manifest statement occurs as a paragraph of `corpus`.
pub fn verify_counts(corpus: &Path, manifest: &[ManifestEntry]) -> Result<VerifyOutcome> {
    let mut verifier = CountVerifier::new(manifest);
    for lines in Batches::open(corpus, BATCH_DOCS)? {
        for (n, line) in lines? {
            let doc = Document::parse(corpus, n, &line)?;
            for p in split_paragraphs(&doc.text) {
                verifier.observe(p);
            }
        }
    }
    Ok(verifier.finish())
}
