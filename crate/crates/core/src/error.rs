use alloc::string::String;
use core::fmt;

/// Tensor axis named in dimension errors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Batch,
    Channels,
    Height,
    Width,
    /// Flattened length, used by dense layers and vector operations.
    Length,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Axis::Batch => "batch",
            Axis::Channels => "channels",
            Axis::Height => "height",
            Axis::Width => "width",
            Axis::Length => "length",
        };
        f.write_str(name)
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{op}: {axis} mismatch (expected {expected}, found {found})")]
    Dimension {
        op: &'static str,
        axis: Axis,
        expected: usize,
        found: usize,
    },
    #[error("{op}: {message}")]
    Shape { op: &'static str, message: String },
    #[error("{0}")]
    State(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("perturbation error: {0}")]
    Perturbation(String),
    #[error("metric error: {0}")]
    Metric(String),
    #[error("numerical failure in {layer}: {detail}")]
    Numerical { layer: String, detail: String },
    #[error("training diverged at step {step}: loss {loss} exceeds {limit}")]
    Diverged { step: u64, loss: f64, limit: f64 },
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_dim(op: &'static str, axis: Axis, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension {
            op,
            axis,
            expected,
            found,
        })
    }
}
