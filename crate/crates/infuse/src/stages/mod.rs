//! Pipeline stages. Each takes explicit inputs, writes its artifacts and
//! returns a summary; the CLI layer resolves paths and writes manifests.

pub mod eval;
pub mod filter;
pub mod fit;
pub mod inject;
pub mod report;
pub mod score;
