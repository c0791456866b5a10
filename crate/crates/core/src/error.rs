use std::path::PathBuf;

/// Errors produced across the indexing, modeling and evaluation pipeline.
#[derive(thiserror::Error, Debug)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("duplicate docno: {0}")]
    DuplicateDocno(String),

    #[error("unreadable corpus record at byte offset {offset}: {message}")]
    CorpusRecord { offset: u64, message: String },

    #[error("spam file line {line}: {message}")]
    SpamLine { line: usize, message: String },

    #[error("malformed session log at line {line}: {message}")]
    Xml { line: u32, message: String },

    #[error("qrels line {line}: {message}")]
    QrelsLine { line: usize, message: String },

    #[error("run file line {line}: {message}")]
    RunLine { line: usize, message: String },

    #[error("mapping file: {0}")]
    Mapping(String),

    #[error("anchor file line {line}: {message}")]
    AnchorLine { line: usize, message: String },

    #[error("index file: {0}")]
    IndexFormat(String),

    #[error("unknown document: {0}")]
    UnknownDoc(String),

    #[error("n-gram must have at least 2 terms (got {0})")]
    NgramTooShort(usize),

    #[error("empty query{}", context.as_deref().map(|c| format!(" ({c})")).unwrap_or_default())]
    EmptyQuery { context: Option<String> },

    #[error("cannot aggregate an empty list of query models")]
    EmptyModelList,

    #[error("query model is empty")]
    EmptyQueryModel,

    #[error("empty candidate set for session {0}")]
    EmptyCandidates(String),

    #[error("interaction {index} out of range for session {session} (history length {len})")]
    InteractionOutOfRange {
        session: String,
        index: usize,
        len: usize,
    },

    #[error("session {session}: interaction {interaction} has no result page")]
    MissingSerp { session: String, interaction: usize },

    #[error("invalid ranking for session {session}: {message}")]
    InvalidRanking { session: String, message: String },

    #[error("invalid run tag {0:?}: must be non-empty without whitespace")]
    InvalidTag(String),

    #[error("session {0} has no positively judged documents")]
    NotEvaluable(String),

    #[error("session {session}: grid search skipped ({reason})")]
    GridSkipped { session: String, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures reading or parsing inputs (as opposed to evaluation problems).
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::CorpusRecord { .. }
                | Error::SpamLine { .. }
                | Error::Xml { .. }
                | Error::QrelsLine { .. }
                | Error::RunLine { .. }
                | Error::Mapping(_)
                | Error::AnchorLine { .. }
                | Error::IndexFormat(_)
                | Error::DuplicateDocno(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
