use std::path::Path;

use infuse_core::{build_eval, DistractorSource, EvalItem, TemplateBank, TripleSet};

use crate::config::DistractorMode;
use crate::error::{Error, Result};
use crate::formats::eval::load_distractors;
use crate::formats::write_jsonl;

pub fn distractor_source(mode: DistractorMode, file: Option<&Path>) -> Result<DistractorSource> {
    match (mode, file) {
        (DistractorMode::ExternalFile, Some(p)) => Ok(DistractorSource::External(load_distractors(p)?)),
        (DistractorMode::ExternalFile, None) => Err(Error::Config("external distractor mode needs a distractor file".into())),
        (DistractorMode::SameRelation, _) => Ok(DistractorSource::SameRelation),
    }
}

pub fn build_eval_file(
    triples: &TripleSet,
    questions: &TemplateBank,
    source: &DistractorSource,
    seed: u64,
    output: &Path,
) -> Result<Vec<EvalItem>> {
    let items = build_eval(triples, questions, source, seed)?;
    write_jsonl(output, &items)?;
    Ok(items)
}
