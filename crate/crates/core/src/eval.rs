//! Four-option multiple-choice items built from triples.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::rng::keyed_stream;
use crate::templating::{render_question, TemplateBank, TemplateError};
use crate::text::{TokenCounter, WhitespaceTokens};
use crate::triple::TripleSet;

pub const OPTION_COUNT: usize = 4;
pub const DISTRACTOR_COUNT: usize = OPTION_COUNT - 1;
/// Sampled distractors within this many whitespace tokens of the answer are preferred.
pub const LENGTH_SLACK: u64 = 2;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("triple {triple_id}: distractor {distractor:?} equals the answer")]
    DistractorEqualsObject { triple_id: usize, distractor: String },
    #[error("triple {triple_id}: distractors are not pairwise distinct")]
    DuplicateDistractors { triple_id: usize },
    #[error("triple {triple_id}: expected {DISTRACTOR_COUNT} distractors, got {got}")]
    WrongDistractorCount { triple_id: usize, got: usize },
    #[error("triple {triple_id}: no distractors supplied")]
    MissingDistractors { triple_id: usize },
    #[error("triple {triple_id}: only {available} distinct same-relation objects available")]
    InsufficientDistractors { triple_id: usize, available: usize },
    #[error(transparent)]
    Template(#[from] TemplateError),
}

/// One rendered question with its options and the index of the true object.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalItem {
    pub triple_id: usize,
    pub question: String,
    pub options: Vec<String>,
    pub answer_index: usize,
}

impl EvalItem {
    /// `Question: <question> Answer: <option>`, with no trailing punctuation.
    pub fn option_prompt(&self, i: usize) -> String {
        alloc::format!("Question: {} Answer: {}", self.question, self.options[i])
    }

    pub fn option_prompts(&self) -> Vec<String> {
        (0..self.options.len()).map(|i| self.option_prompt(i)).collect()
    }

    pub fn answer(&self) -> &str {
        &self.options[self.answer_index]
    }

    /// Structural checks: four distinct options and an in-range answer.
    pub fn is_well_formed(&self) -> bool {
        let distinct: BTreeSet<&String> = self.options.iter().collect();
        self.options.len() == OPTION_COUNT && distinct.len() == OPTION_COUNT && self.answer_index < OPTION_COUNT
    }
}

/// Where wrong options come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DistractorSource {
    /// Externally generated distractors keyed by triple id.
    External(BTreeMap<usize, Vec<String>>),
    /// Draw from other objects of the same relation in the triple set.
    SameRelation,
}

fn check_external(triple_id: usize, object: &str, d: &[String]) -> Result<(), EvalError> {
    if d.len() != DISTRACTOR_COUNT {
        return Err(EvalError::WrongDistractorCount { triple_id, got: d.len() });
    }
    if let Some(x) = d.iter().find(|x| x.as_str() == object) {
        return Err(EvalError::DistractorEqualsObject { triple_id, distractor: x.clone() });
    }
    let distinct: BTreeSet<&String> = d.iter().collect();
    if distinct.len() != d.len() {
        return Err(EvalError::DuplicateDistractors { triple_id });
    }
    Ok(())
}

/// Pick three same-relation objects, preferring ones of similar whitespace length.
pub fn sample_distractors<R: Rng>(object: &str, pool: &[&str], rng: &mut R) -> Option<Vec<String>> {
    let target = WhitespaceTokens.count(object);
    let (mut near, mut far): (Vec<&str>, Vec<&str>) = pool
        .iter()
        .copied()
        .filter(|c| *c != object)
        .partition(|c| WhitespaceTokens.count(c).abs_diff(target) <= LENGTH_SLACK);
    near.shuffle(rng);
    far.shuffle(rng);
    let picked: Vec<String> = near.into_iter().chain(far).take(DISTRACTOR_COUNT).map(String::from).collect();
    (picked.len() == DISTRACTOR_COUNT).then_some(picked)
}

/// Build one item per triple. `triple_id` is the triple's position in `ts`.
///
/// The answer slot is drawn uniformly from a stream keyed by `(seed, triple_id)`.
pub fn build_eval(
    ts: &TripleSet,
    questions: &TemplateBank,
    source: &DistractorSource,
    seed: u64,
) -> Result<Vec<EvalItem>, EvalError> {
    let mut pools: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    if matches!(source, DistractorSource::SameRelation) {
        for t in ts {
            pools.entry(t.relation.as_str()).or_default().insert(t.object.as_str());
        }
    }
    let pools: BTreeMap<&str, Vec<&str>> = pools.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect();

    let mut items = Vec::with_capacity(ts.len());
    for (triple_id, t) in ts.iter().enumerate() {
        let question = render_question(t, questions)?;
        let mut rng = keyed_stream(seed, "eval_item", &[&(triple_id as u64).to_le_bytes()]);
        let distractors = match source {
            DistractorSource::External(map) => {
                let d = map.get(&triple_id).ok_or(EvalError::MissingDistractors { triple_id })?;
                check_external(triple_id, &t.object, d)?;
                d.clone()
            }
            DistractorSource::SameRelation => {
                let pool = pools.get(t.relation.as_str()).map(Vec::as_slice).unwrap_or(&[]);
                sample_distractors(&t.object, pool, &mut rng).ok_or_else(|| EvalError::InsufficientDistractors {
                    triple_id,
                    available: pool.iter().filter(|c| **c != t.object).count(),
                })?
            }
        };
        let answer_index = rng.random_range(0..OPTION_COUNT);
        let mut options = distractors;
        options.insert(answer_index, t.object.clone());
        items.push(EvalItem { triple_id, question, options, answer_index });
    }
    Ok(items)
}
