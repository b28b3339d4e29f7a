//! File formats, sharded pipeline stages and the command-line front end for
//! knowledge-infusion experiments. The algorithms live in `infuse-core`.

pub mod cli;
pub mod config;
pub mod digest;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod stages;

pub use error::{Error, Result};
