use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: {key}: {msg}")]
    OutOfRange { line: usize, key: String, msg: String },
    #[error("this command needs `{0}` in the config")]
    Missing(String),
    #[error("CAUCHY_STOKES_THREADS: {0}")]
    Threads(String),
    #[error("cannot serialize {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] cauchy_stokes_core::Error),
}
