//! Minimum-perplexity answer selection and Memorization Rate.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::eval::{EvalItem, OPTION_COUNT};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoreError {
    #[error("scores are for triple {scores} but the item is triple {item}")]
    IdMismatch { item: usize, scores: usize },
    #[error("triple {triple_id}: expected {OPTION_COUNT} scores, got {got}")]
    WrongLength { triple_id: usize, got: usize },
    #[error("triple {triple_id}: score {value} is not finite")]
    NonFinite { triple_id: usize, value: f64 },
    #[error("triple {triple_id}: perplexity {value} is not positive")]
    NonPositive { triple_id: usize, value: f64 },
    #[error("no scores for triple {triple_id}")]
    MissingScores { triple_id: usize },
    #[error("triple {triple_id} scored more than once")]
    DuplicateScores { triple_id: usize },
    #[error("no items to score")]
    NoItems,
    #[error("invalid run record: {0}")]
    InvalidRecord(&'static str),
}

/// How the per-option numbers should be read. All kinds are "lower is better".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ScoreKind {
    #[default]
    Ppl,
    LogPpl,
    Nll,
}

/// Per-option scores for one item, aligned with `EvalItem::options`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OptionScores {
    pub triple_id: usize,
    pub ppl: Vec<f64>,
}

impl OptionScores {
    pub fn validate(&self, kind: ScoreKind) -> Result<(), ScoreError> {
        let triple_id = self.triple_id;
        if self.ppl.len() != OPTION_COUNT {
            return Err(ScoreError::WrongLength { triple_id, got: self.ppl.len() });
        }
        for &value in &self.ppl {
            if !value.is_finite() {
                return Err(ScoreError::NonFinite { triple_id, value });
            }
            if kind == ScoreKind::Ppl && value <= 0.0 {
                return Err(ScoreError::NonPositive { triple_id, value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    pub index: usize,
    /// More than one option shared the minimum score.
    pub tie: bool,
}

/// Argmin over option scores; ties go to the lowest index and are reported.
pub fn select_option(item: &EvalItem, scores: &OptionScores, kind: ScoreKind) -> Result<Selection, ScoreError> {
    if item.triple_id != scores.triple_id {
        return Err(ScoreError::IdMismatch { item: item.triple_id, scores: scores.triple_id });
    }
    scores.validate(kind)?;
    if scores.ppl.len() != item.options.len() {
        return Err(ScoreError::WrongLength { triple_id: item.triple_id, got: scores.ppl.len() });
    }
    let mut index = 0;
    for (i, &v) in scores.ppl.iter().enumerate().skip(1) {
        if v < scores.ppl[index] {
            index = i;
        }
    }
    let best = scores.ppl[index];
    let tie = scores.ppl.iter().filter(|&&v| v == best).count() > 1;
    Ok(Selection { index, tie })
}

/// Associative `(hits, total)` accumulator with the tie log.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MrSummary {
    pub hits: u64,
    pub total: u64,
    /// Triple ids whose minimum score was shared by several options.
    pub ties: Vec<usize>,
}

impl MrSummary {
    pub fn record(&mut self, item: &EvalItem, sel: Selection) {
        self.total += 1;
        if item.options[sel.index] == item.answer() {
            self.hits += 1;
        }
        if sel.tie {
            self.ties.push(item.triple_id);
        }
    }

    pub fn merge(&mut self, other: &MrSummary) {
        self.hits += other.hits;
        self.total += other.total;
        self.ties.extend_from_slice(&other.ties);
        self.ties.sort_unstable();
    }

    /// Fraction of items whose selected option text equals the object.
    pub fn mr(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.hits as f64 / self.total as f64
        }
    }
}

/// Score every item. Scores are matched by triple id and may arrive in any order.
pub fn memorization_rate(items: &[EvalItem], scores: &[OptionScores], kind: ScoreKind) -> Result<MrSummary, ScoreError> {
    if items.is_empty() {
        return Err(ScoreError::NoItems);
    }
    let mut by_id: BTreeMap<usize, &OptionScores> = BTreeMap::new();
    for s in scores {
        if by_id.insert(s.triple_id, s).is_some() {
            return Err(ScoreError::DuplicateScores { triple_id: s.triple_id });
        }
    }
    let mut acc = MrSummary::default();
    for item in items {
        let s = by_id
            .get(&item.triple_id)
            .ok_or(ScoreError::MissingScores { triple_id: item.triple_id })?;
        acc.record(item, select_option(item, s, kind)?);
    }
    acc.ties.sort_unstable();
    Ok(acc)
}

/// One measured point of the frequency sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunRecord {
    #[cfg_attr(feature = "serde", serde(rename = "N"))]
    pub model_size: u64,
    #[cfg_attr(feature = "serde", serde(rename = "D"))]
    pub training_tokens: u64,
    #[cfg_attr(feature = "serde", serde(rename = "F"))]
    pub frequency: u64,
    pub mr: f64,
    pub n_items: u64,
}

impl RunRecord {
    pub fn validate(&self) -> Result<(), ScoreError> {
        if !(0.0..=1.0).contains(&self.mr) {
            return Err(ScoreError::InvalidRecord("mr outside [0, 1]"));
        }
        if self.n_items == 0 {
            return Err(ScoreError::InvalidRecord("n_items must be at least 1"));
        }
        Ok(())
    }
}
