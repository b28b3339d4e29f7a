use std::io::Write;
use std::path::Path;

use infuse_core::filter::filter_document;
use infuse_core::{FilterStats, MatchIndex, TripleSet};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::corpus::{Batches, Document, BATCH_DOCS};
use crate::formats::create;
use crate::formats::tokens::Tokenizer;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FilterReport {
    pub documents_in: u64,
    /// Documents with at least one surviving paragraph.
    pub documents_out: u64,
    pub tokenizer: String,
    #[serde(flatten)]
    pub stats: FilterStats,
}

/// Drop every paragraph in which all words of some triple co-occur.
///
/// Documents are processed in parallel batches; results are written in input
/// order, so the output does not depend on the thread count.
pub fn filter_corpus(triples: &TripleSet, input: &Path, output: &Path, tokens: &Tokenizer) -> Result<FilterReport> {
    filter_corpus_batched(triples, input, output, tokens, BATCH_DOCS)
}

/// [`filter_corpus`] with an explicit batch size (the unit of sharding).
pub fn filter_corpus_batched(
    triples: &TripleSet,
    input: &Path,
    output: &Path,
    tokens: &Tokenizer,
    batch: usize,
) -> Result<FilterReport> {
    let index = MatchIndex::build(triples)?;
    let mut out = create(output)?;
    let mut report = FilterReport {
        tokenizer: tokens.name().to_string(),
        stats: FilterStats::new(index.triple_count()),
        ..Default::default()
    };
    for lines in Batches::open(input, batch)? {
        let lines = lines?;
        let results: Vec<Result<(Option<String>, FilterStats)>> = lines
            .par_iter()
            .map_init(
                || index.matcher(),
                |matcher, (line_no, line)| {
                    let doc = Document::parse(input, *line_no, line)?;
                    let mut stats = FilterStats::new(index.triple_count());
                    let kept = filter_document(&doc.text, matcher, tokens, &mut stats)
                        .map(|text| Document { id: doc.id, text }.to_line());
                    Ok((kept, stats))
                },
            )
            .collect();
        for r in results {
            let (kept, stats) = r?;
            report.documents_in += 1;
            report.stats.merge(&stats);
            if let Some(line) = kept {
                report.documents_out += 1;
                out.write_all(line.as_bytes()).map_err(|e| Error::io(output, e))?;
            }
        }
    }
    out.flush().map_err(|e| Error::io(output, e))?;
    Ok(report)
}
