//! Shared error type for the library.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("lex error at byte {offset}: {message}")]
    Lex { offset: usize, message: String },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("flattened-tree error at token {index}: {message}")]
    Sbt { index: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training aborted at epoch {epoch}, batch {batch}: {message}")]
    Train {
        epoch: usize,
        batch: usize,
        message: String,
    },

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("model file error: {0}")]
    ModelFile(String),
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
