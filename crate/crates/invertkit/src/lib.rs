//! File formats, image IO, datasets and the command-line pipeline built on
//! `invertkit-core`.

pub mod cli;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod formats;
pub mod framing;
pub mod imageio;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
