//! Session Track logs, qrels and the topic→session / grade mappings.

mod qrels;
mod types;
mod xml;

pub use qrels::{parse_qrels, read_qrels, GradeMapping, Judgments, Qrels, QrelsReport, SessionMapping};
pub use types::{HistoryMode, Interaction, Query, ResultEntry, Session};
pub use xml::{parse_sessions, write_sessions, ParsedLog, SkippedSession, SAT_DWELL_SECS};

use std::path::Path;

use crate::error::{Error, Result};
use crate::textindex::Tokenizer;

pub fn read_sessions(path: &Path, tokenizer: &Tokenizer) -> Result<ParsedLog> {
    let xml = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sessions(&xml, tokenizer)
}
