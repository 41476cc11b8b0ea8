use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported or corrupt image {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("image has a single intensity value ({value}); cannot threshold")]
    DegenerateHistogram { value: u8 },

    #[error("no foreground pixels")]
    EmptyForeground,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch in {context}: expected {expected:?}, got {actual:?}")]
    Shape {
        context: &'static str,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("training diverged at epoch {epoch} (learning rate {learning_rate}): loss is {loss}")]
    Divergence {
        epoch: usize,
        learning_rate: f64,
        loss: f64,
    },

    #[error("SMO did not converge after {iterations} iterations (dual gap {gap:.3e})")]
    Convergence { iterations: usize, gap: f64 },

    #[error("{branch} branch: {source}")]
    Branch {
        branch: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("fold plan integrity check failed: {0}")]
    Leakage(String),

    #[error("class {class} has {count} samples; at least {required} are needed")]
    ClassTooSmall {
        class: String,
        count: usize,
        required: usize,
    },

    #[error("model file: {0}")]
    Container(String),

    #[error("feature file: {0}")]
    FeatureFile(String),

    #[error("configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_branch(self, branch: &'static str) -> Self {
        Error::Branch {
            branch,
            source: Box::new(self),
        }
    }

    /// The innermost error, looking through branch tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Branch { source, .. } => source.root(),
            other => other,
        }
    }
}
