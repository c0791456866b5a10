//! Corpus and spam-score readers.
//!
//! Corpora are either JSON lines (`{"docno": .., "text": ..}` per line) or
//! TRECTEXT (`<DOC><DOCNO>..</DOCNO><TEXT>..</TEXT></DOC>`). The format is
//! sniffed from the first non-whitespace byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub docno: String,
    pub text: String,
}

impl CorpusRecord {
    pub fn new(docno: impl Into<String>, text: impl Into<String>) -> Self {
        CorpusRecord {
            docno: docno.into(),
            text: text.into(),
        }
    }
}

pub fn read_corpus(path: &Path) -> Result<Vec<CorpusRecord>> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&raw)
}

pub fn parse_corpus(raw: &[u8]) -> Result<Vec<CorpusRecord>> {
    match raw.iter().find(|b| !b.is_ascii_whitespace()) {
        None => Ok(Vec::new()),
        Some(b'<') => parse_trectext(raw),
        Some(_) => parse_jsonl(raw),
    }
}

pub fn parse_jsonl(raw: &[u8]) -> Result<Vec<CorpusRecord>> {
    let mut out = Vec::new();
    let mut offset = 0u64;
    for line in raw.split_inclusive(|&b| b == b'\n') {
        let start = offset;
        offset += line.len() as u64;
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let record: CorpusRecord =
            serde_json::from_slice(line).map_err(|e| Error::CorpusRecord {
                offset: start,
                message: e.to_string(),
            })?;
        out.push(record);
    }
    Ok(out)
}

fn find(haystack: &[u8], needle: &[u8], from: usize) -> Option<usize> {
    haystack[from..]
        .windows(needle.len())
        .position(|w| w.eq_ignore_ascii_case(needle))
        .map(|p| p + from)
}

fn element<'a>(doc: &'a [u8], tag: &str) -> Option<&'a [u8]> {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let s = find(doc, open.as_bytes(), 0)? + open.len();
    let e = find(doc, close.as_bytes(), s)?;
    Some(&doc[s..e])
}

pub fn parse_trectext(raw: &[u8]) -> Result<Vec<CorpusRecord>> {
    let mut out = Vec::new();
    let mut pos = 0;
    while let Some(start) = find(raw, b"<DOC>", pos) {
        let end = find(raw, b"</DOC>", start).ok_or_else(|| Error::CorpusRecord {
            offset: start as u64,
            message: "unterminated <DOC>".into(),
        })?;
        let doc = &raw[start..end];
        let bad = |message: &str| Error::CorpusRecord {
            offset: start as u64,
            message: message.into(),
        };
        let docno = element(doc, "DOCNO").ok_or_else(|| bad("missing <DOCNO>"))?;
        let docno = std::str::from_utf8(docno)
            .map_err(|_| bad("DOCNO is not UTF-8"))?
            .trim()
            .to_string();
        if docno.is_empty() {
            return Err(bad("empty <DOCNO>"));
        }
        // Without a <TEXT> element everything after </DOCNO> is the body.
        let body = match element(doc, "TEXT") {
            Some(t) => t,
            None => {
                let after = find(doc, b"</DOCNO>", 0).map(|p| p + 8).unwrap_or(doc.len());
                &doc[after..]
            }
        };
        let text = String::from_utf8_lossy(body).into_owned();
        out.push(CorpusRecord { docno, text });
        pos = end + b"</DOC>".len();
    }
    Ok(out)
}

/// Spam percentile per docno (0 = spammiest, 99 = least spammy).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpamScores {
    scores: BTreeMap<String, u8>,
}

impl SpamScores {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, docno: impl Into<String>, score: u8) -> Result<()> {
        if score > 99 {
            return Err(Error::InvalidConfig(format!(
                "spam score {score} outside 0..=99"
            )));
        }
        self.scores.insert(docno.into(), score);
        Ok(())
    }

    pub fn get(&self, docno: &str) -> Option<u8> {
        self.scores.get(docno).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u8)> {
        self.scores.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Parses `score docno` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = SpamScores::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let mut fields = line.split_whitespace();
            let (Some(score), Some(docno)) = (fields.next(), fields.next()) else {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(Error::SpamLine {
                    line: line_no,
                    message: "expected `score docno`".into(),
                });
            };
            let score: u8 = score
                .parse()
                .ok()
                .filter(|s| *s <= 99)
                .ok_or_else(|| Error::SpamLine {
                    line: line_no,
                    message: format!("score {score:?} is not an integer in 0..=99"),
                })?;
            out.scores.insert(docno.to_string(), score);
        }
        Ok(out)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        self.scores
            .iter()
            .map(|(d, s)| format!("{s} {d}\n"))
            .collect()
    }
}
