use serde::{Deserialize, Serialize};

use crate::textindex::{Term, Tokenizer};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    /// Raw query text as logged (trimmed).
    pub text: String,
    pub terms: Vec<Term>,
}

impl Query {
    pub fn new(text: &str, tokenizer: &Tokenizer) -> Self {
        let text = text.trim().to_string();
        let terms = tokenizer.tokenize(&text);
        Query { text, terms }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultEntry {
    pub docno: String,
    /// 1-based rank on the result page.
    pub rank: u32,
    pub url: String,
    pub title: String,
    pub snippet: String,
    pub clicked: bool,
    /// Satisfied click; implies `clicked`.
    pub sat_click: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interaction {
    pub query: Query,
    pub serp: Vec<ResultEntry>,
}

/// One logged session: `history` holds the n past interactions and
/// `current_query` is q_{n+1}, the query to rank for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub topic_id: Option<String>,
    pub history: Vec<Interaction>,
    pub current_query: Query,
}

/// How much of the history a truncated session keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistoryMode {
    FullHistory,
    PreviousQueryOnly,
}

impl Session {
    /// Number of queries, history plus the current one.
    pub fn len(&self) -> usize {
        self.history.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Query q_i, 1-based; `i == len()` is the current query.
    pub fn query(&self, i: usize) -> Option<&Query> {
        match i {
            0 => None,
            i if i <= self.history.len() => Some(&self.history[i - 1].query),
            i if i == self.history.len() + 1 => Some(&self.current_query),
            _ => None,
        }
    }

    pub fn queries(&self) -> impl Iterator<Item = &Query> {
        self.history
            .iter()
            .map(|i| &i.query)
            .chain(std::iter::once(&self.current_query))
    }

    /// Session as it looked when q_j was issued.
    ///
    /// Panics if `j` is not in `1..=len()`.
    pub fn truncated(&self, j: usize, mode: HistoryMode) -> Session {
        assert!(
            (1..=self.len()).contains(&j),
            "truncation point {j} outside 1..={}",
            self.len()
        );
        let current_query = self.query(j).cloned().expect("checked range");
        let history = match mode {
            HistoryMode::FullHistory => self.history[..j - 1].to_vec(),
            HistoryMode::PreviousQueryOnly if j >= 2 => vec![self.history[j - 2].clone()],
            HistoryMode::PreviousQueryOnly => Vec::new(),
        };
        Session {
            session_id: self.session_id.clone(),
            topic_id: self.topic_id.clone(),
            history,
            current_query,
        }
    }
}
