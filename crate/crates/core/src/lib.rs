//! Allocation-only core of the knowledge-infusion toolkit.
//!
//! Everything here is pure computation over in-memory values: triple sets and
//! their deduplication, template banks, the co-occurrence matcher used to scrub
//! a pretraining corpus, injection planning, multiple-choice item construction,
//! perplexity-based scoring, and the curve/scaling-law fitting machinery.
//! File formats, threading and the command line live in the `infuse` crate.
#![no_std]
// `!(x > 0.0)` is used on purpose so NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod eval;
pub mod filter;
pub mod fit;
pub mod inject;
pub mod rng;
pub mod scoring;
pub mod templating;
pub mod text;
pub mod triple;

pub use eval::{build_eval, DistractorSource, EvalError, EvalItem};
pub use filter::{FilterStats, MatchIndex};
pub use inject::{InjectionPlan, InjectionReport, ManifestEntry, VerifyOutcome};
pub use scoring::{OptionScores, RunRecord, ScoreKind};
pub use templating::{BankKind, DiversityMode, TemplateBank};
pub use triple::{KnowledgeTriple, RelationRegistry, RelationType, TripleError, TripleSet};
