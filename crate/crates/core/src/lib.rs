//! Lexical query modeling for session search.
//!
//! A Dirichlet-smoothed language-model retrieval engine over a positional
//! inverted index, session query models (TF, Nugget, QCM), two-phase
//! retrieval, TREC-style evaluation and the ground-truth and ideal
//! term-weighting oracles.

pub mod error;
pub mod experiment;
pub mod lmscore;
pub mod metrics;
pub mod oracles;
pub mod pipeline;
pub mod querymodels;
pub mod ranker;
pub mod report;
pub mod sessionlog;
pub mod synthetic;
pub mod textindex;

pub use error::{Error, Result};
