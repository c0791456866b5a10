//! Topic-centric qrels converted to session-centric judgments.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raw judgment grade → gain, per track edition. Empty means identity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GradeMapping(pub BTreeMap<i32, i32>);

impl GradeMapping {
    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn map(&self, raw: i32) -> Option<i32> {
        if self.0.is_empty() {
            Some(raw)
        } else {
            self.0.get(&raw).copied()
        }
    }
}

/// Contents of a mapping file:
/// `{ "topic_to_sessions": {"T": ["S1", ..]}, "grade_map": {"2": 1} }`.
///
/// An empty `topic_to_sessions` maps every topic to the session of the same id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionMapping {
    #[serde(default)]
    pub topic_to_sessions: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub grade_map: GradeMapping,
}

impl SessionMapping {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Mapping(e.to_string()))
    }

    fn sessions_for<'a>(&'a self, topic: &'a str) -> Option<Vec<&'a str>> {
        if self.topic_to_sessions.is_empty() {
            Some(vec![topic])
        } else {
            self.topic_to_sessions
                .get(topic)
                .map(|v| v.iter().map(String::as_str).collect())
        }
    }
}

/// Session id → docno → gain. Negative gains (spam) are kept.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    sessions: BTreeMap<String, BTreeMap<String, i32>>,
}

pub type Judgments = BTreeMap<String, i32>;

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, session: impl Into<String>, docno: impl Into<String>, grade: i32) {
        self.sessions
            .entry(session.into())
            .or_default()
            .insert(docno.into(), grade);
    }

    pub fn for_session(&self, session: &str) -> Option<&Judgments> {
        self.sessions.get(session)
    }

    pub fn sessions(&self) -> impl Iterator<Item = (&str, &Judgments)> {
        self.sessions.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn contains_session(&self, session: &str) -> bool {
        self.sessions.contains_key(session)
    }

    /// Total number of (session, docno) judgments.
    pub fn len(&self) -> usize {
        self.sessions.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }

    /// `session 0 docno grade` lines, sorted by session then docno.
    pub fn to_trec(&self) -> String {
        let mut out = String::new();
        for (s, judged) in &self.sessions {
            for (d, g) in judged {
                out.push_str(&format!("{s} 0 {d} {g}\n"));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QrelsReport {
    pub lines: usize,
    /// Distinct (topic, docno) judgments after duplicate resolution.
    pub topic_judgments: usize,
    pub duplicate_lines: usize,
    pub unmapped_topics: BTreeSet<String>,
    pub dropped_lines: usize,
    /// Σ over mapped topics of |judgments| × |sessions|.
    pub expanded: usize,
    /// Expanded entries that landed on an existing (session, docno) from another topic.
    pub collisions: usize,
}

/// Parses `topic 0 docno grade` lines and copies each topic's judgments to
/// its mapped sessions. Without a mapping, topics are session ids.
///
/// Duplicate (topic, docno) lines keep the last grade. Unmapped topics are
/// dropped and listed in the report.
pub fn parse_qrels(text: &str, mapping: Option<&SessionMapping>) -> Result<(Qrels, QrelsReport)> {
    let identity = SessionMapping::default();
    let mapping = mapping.unwrap_or(&identity);
    let mut report = QrelsReport::default();
    let mut by_topic: BTreeMap<&str, BTreeMap<&str, i32>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        report.lines += 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::QrelsLine {
                line: line_no,
                message: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let raw: i32 = fields[3].parse().map_err(|_| Error::QrelsLine {
            line: line_no,
            message: format!("non-integer grade {:?}", fields[3]),
        })?;
        let gain = mapping.grade_map.map(raw).ok_or_else(|| Error::QrelsLine {
            line: line_no,
            message: format!("grade {raw} missing from grade mapping"),
        })?;
        if by_topic
            .entry(fields[0])
            .or_default()
            .insert(fields[2], gain)
            .is_some()
        {
            report.duplicate_lines += 1;
            warn!(
                "qrels line {line_no}: duplicate judgment for ({}, {}); last line wins",
                fields[0], fields[2]
            );
        }
    }

    let mut qrels = Qrels::new();
    for (topic, judged) in &by_topic {
        report.topic_judgments += judged.len();
        let Some(sessions) = mapping.sessions_for(topic) else {
            warn!("qrels topic {topic} has no session mapping; {} judgments dropped", judged.len());
            report.unmapped_topics.insert(topic.to_string());
            report.dropped_lines += judged.len();
            continue;
        };
        for session in sessions {
            for (docno, gain) in judged {
                report.expanded += 1;
                let entry = qrels.sessions.entry(session.to_string()).or_default();
                if entry.insert(docno.to_string(), *gain).is_some() {
                    report.collisions += 1;
                }
            }
        }
    }
    Ok((qrels, report))
}

pub fn read_qrels(path: &Path, mapping: Option<&SessionMapping>) -> Result<(Qrels, QrelsReport)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_qrels(&text, mapping)
}
