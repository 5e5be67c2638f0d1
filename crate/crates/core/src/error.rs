use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid identifier {0:?}")]
    InvalidIdentifier(String),

    #[error("unknown world id `{0}`")]
    UnknownWorld(String),

    #[error("unknown agent `{0}`")]
    UnknownAgent(String),

    #[error("distributed knowledge needs a non-empty agent group")]
    EmptyGroup,

    #[error("duplicate {kind} `{id}`")]
    Duplicate { kind: &'static str, id: String },

    #[error("model has no worlds")]
    EmptyModel,

    #[error("transition system needs at least one frame")]
    EmptyFrames,

    #[error("frame {frame} has agent roster {found:?}, expected {expected:?}")]
    RosterMismatch {
        frame: usize,
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("offset {offset} out of range for a path of length {len}")]
    PathOffset { offset: usize, len: usize },

    #[error("path index {index} out of range ({count} total paths)")]
    PathIndex { index: u64, count: u128 },

    #[error("{line}:{col}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        line: usize,
        col: usize,
        expected: Vec<String>,
        found: String,
    },

    #[error("{line}:{col}: temporal operator `{op}` inside epistemic scope")]
    Level { line: usize, col: usize, op: String },

    #[error("placeholder ${0} was not substituted")]
    Placeholder(usize),

    #[error("template error: {0}")]
    Template(String),

    #[error("need at least one candidate announcement")]
    NoCandidates,

    #[error("scorer error: {0}")]
    Scorer(String),

    #[error("{path}: {message}")]
    Ingest { path: String, message: String },

    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn ingest(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Ingest {
            path: path.into(),
            message: message.into(),
        }
    }
}
