//! File formats, the Monte Carlo experiment driver and the `estnet` command
//! line on top of [`estnet_core`].

#![forbid(unsafe_code)]

pub mod build;
pub mod cli;
mod error;
pub mod experiment;
pub mod ingest;
pub mod output;
pub mod stats;

pub use error::{Error, Result};
