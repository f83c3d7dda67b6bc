//! Error type shared by the filter kernels and the experiment harnesses.

/// Errors produced by filter kernels, signal generators and experiment runs.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter or argument violates its documented range or shape.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An input lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A sequence index is out of range.
    #[error("index {index} out of range for sequence of length {len}")]
    Index { index: usize, len: usize },

    /// A filter produced a non-finite weight, output or fractional power.
    /// Runs are aborted immediately rather than silently continued.
    #[error("filter diverged at iteration {iteration}")]
    Divergence { iteration: u64 },

    /// A member of a Monte-Carlo ensemble failed; carries the run index.
    #[error("ensemble run {run} failed: {source}")]
    Run {
        run: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
