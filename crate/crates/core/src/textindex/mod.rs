//! Tokenization, corpus ingestion with spam filtering, and the positional
//! inverted index with its collection statistics.

mod corpus;
mod index;
mod persist;
mod tokenizer;

pub use corpus::{parse_corpus, parse_jsonl, parse_trectext, read_corpus, CorpusRecord, SpamScores};
pub use index::{
    build_index, BuildReport, CollectionStats, DocId, Document, Index, TermId,
    DEFAULT_SPAM_THRESHOLD,
};
pub use persist::{load_index, read_index, save_index, write_index};
pub use tokenizer::{tokenize, Term, Tokenizer, TokenizerConfig};
