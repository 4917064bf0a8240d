//! File formats, dataset pipeline and command-line front end for
//! `spotrot-core`.

pub mod cli;
pub mod config;
pub mod dataset;
mod error;
pub mod export;
pub mod imageio;
pub mod labels;
pub mod runlog;
pub mod svg;

pub use error::{CliError, CliResult};
