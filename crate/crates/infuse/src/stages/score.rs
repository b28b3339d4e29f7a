use infuse_core::scoring::{memorization_rate, MrSummary};
use infuse_core::{EvalItem, OptionScores, RunRecord, ScoreKind};
use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub kind: ScoreKind,
    pub mr: f64,
    pub hits: u64,
    pub n_items: u64,
    /// Items whose lowest score was shared; the lowest index was taken.
    pub ties: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record: Option<RunRecord>,
}

/// Memorization rate of `items` under `scores`, plus a run record when the
/// run coordinates are known.
pub fn score(items: &[EvalItem], scores: &[OptionScores], kind: ScoreKind, coords: Option<(u64, u64, u64)>) -> Result<ScoreSummary> {
    let MrSummary { hits, total, ties } = memorization_rate(items, scores, kind)?;
    let mr = if total == 0 { 0.0 } else { hits as f64 / total as f64 };
    let record = coords.map(|(n, d, f)| RunRecord { model_size: n, training_tokens: d, frequency: f, mr, n_items: total });
    Ok(ScoreSummary { kind, mr, hits, n_items: total, ties, record })
}
