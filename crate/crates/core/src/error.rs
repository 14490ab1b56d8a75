use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the evaluation engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("shape error: expected dimension {expected}, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("missing reranker scores for {} pair(s): {}", .0.len(), preview_pairs(.0))]
    MissingScores(Vec<(String, String)>),

    #[error("class `{0}` has no positive training examples")]
    DegenerateClass(String),

    #[error("pairing error: {0} vs {1} scores")]
    Pairing(usize, usize),

    #[error("data error: {0}")]
    Data(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn parse(path: impl AsRef<std::path::Path>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse { path: path.as_ref().display().to_string(), line, message: message.into() }
    }

    /// True for errors caused by the filesystem rather than by the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

fn preview_pairs(pairs: &[(String, String)]) -> String {
    let mut out: Vec<String> = pairs.iter().take(5).map(|(q, d)| format!("({q}, {d})")).collect();
    if pairs.len() > 5 {
        out.push("...".to_string());
    }
    out.join(", ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
