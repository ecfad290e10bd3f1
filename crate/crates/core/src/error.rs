use std::io;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied argument violates a precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Structurally malformed input (ragged CSV rows, bad PPM header, ...).
    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    /// Well-formed input with values outside the accepted domain.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    /// Every energy weight vanished, i.e. the two measures coincide along
    /// every sampled direction and the slicing distribution is undefined.
    #[error("degenerate slicing weights: all energies are zero")]
    DegenerateWeights,

    #[error("gradient flow diverged at step {step}")]
    Diverged { step: usize },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn format(line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: msg.into(),
        }
    }
}
