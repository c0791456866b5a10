//! Two-phase retrieval: a first pass by the current query's TF model over the
//! whole index, then re-ranking of that candidate set by any query model.
//!
//! Rankings order by score descending, ties by ascending docno.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lmscore::{QueryModel, Scorer, SmoothingConfig};
use crate::querymodels::tf_model;
use crate::sessionlog::Session;
use crate::textindex::{DocId, Index};

pub const DEFAULT_FIRST_PASS_N: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalConfig {
    #[serde(default)]
    pub smoothing: SmoothingConfig,
    #[serde(default = "default_first_pass_n")]
    pub first_pass_n: usize,
}

fn default_first_pass_n() -> usize {
    DEFAULT_FIRST_PASS_N
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            smoothing: SmoothingConfig::default(),
            first_pass_n: DEFAULT_FIRST_PASS_N,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedDoc {
    pub docno: String,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub session_id: String,
    pub entries: Vec<RankedDoc>,
}

fn rank_order(a: (&str, f64), b: (&str, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0))
}

impl Ranking {
    /// Sorts `(docno, score)` pairs by the ranking order and assigns ranks.
    pub fn from_scored(session_id: impl Into<String>, mut scored: Vec<(String, f64)>) -> Self {
        scored.sort_by(|a, b| rank_order((&a.0, a.1), (&b.0, b.1)));
        let entries = scored
            .into_iter()
            .enumerate()
            .map(|(i, (docno, score))| RankedDoc {
                docno,
                score,
                rank: i + 1,
            })
            .collect();
        Ranking {
            session_id: session_id.into(),
            entries,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |message: String| {
            Err(Error::InvalidRanking {
                session: self.session_id.clone(),
                message,
            })
        };
        let mut seen = HashSet::new();
        for (i, e) in self.entries.iter().enumerate() {
            if e.rank != i + 1 {
                return bad(format!("rank {} at position {}", e.rank, i + 1));
            }
            if e.score.is_nan() {
                return bad(format!("NaN score for {}", e.docno));
            }
            if !seen.insert(e.docno.as_str()) {
                return bad(format!("duplicate docno {}", e.docno));
            }
            if i > 0 {
                let p = &self.entries[i - 1];
                if rank_order((&p.docno, p.score), (&e.docno, e.score)) != Ordering::Less {
                    return bad(format!(
                        "{} ({}) may not precede {} ({})",
                        p.docno, p.score, e.docno, e.score
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn docnos(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.docno.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Documents to re-rank for one session, in first-pass order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    pub session_id: String,
    pub docnos: Vec<String>,
}

impl CandidateSet {
    pub fn from_ranking(r: &Ranking) -> Self {
        CandidateSet {
            session_id: r.session_id.clone(),
            docnos: r.docnos().map(str::to_string).collect(),
        }
    }

    /// Keeps the first `n` candidates.
    pub fn truncated(&self, n: usize) -> Self {
        CandidateSet {
            session_id: self.session_id.clone(),
            docnos: self.docnos.iter().take(n).cloned().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.docnos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docnos.is_empty()
    }
}

/// First-pass ranking: every indexed document scored by TF(current query),
/// top `first_pass_n` kept.
pub fn retrieve(index: &Index, session: &Session, cfg: &RetrievalConfig) -> Result<Ranking> {
    let qm = tf_model(&session.current_query).map_err(|_| Error::EmptyQuery {
        context: Some(format!("current query of session {}", session.session_id)),
    })?;
    let scorer = Scorer::new(index, &qm, cfg.smoothing)?;
    let mut scored: Vec<(DocId, f64)> = index
        .documents()
        .par_iter()
        .enumerate()
        .map(|(i, d)| (DocId(i as u32), scorer.score_document(d)))
        .collect();
    // Doc ids follow docno order, so they break ties the same way.
    let cmp = |a: &(DocId, f64), b: &(DocId, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    let n = cfg.first_pass_n.min(scored.len());
    if n < scored.len() && n > 0 {
        scored.select_nth_unstable_by(n - 1, cmp);
    }
    scored.truncate(n);
    scored.sort_by(cmp);
    let entries = scored
        .into_iter()
        .enumerate()
        .map(|(i, (d, score))| RankedDoc {
            docno: index.documents()[d.0 as usize].docno().to_string(),
            score,
            rank: i + 1,
        })
        .collect();
    Ok(Ranking {
        session_id: session.session_id.clone(),
        entries,
    })
}

pub fn first_pass(index: &Index, session: &Session, cfg: &RetrievalConfig) -> Result<CandidateSet> {
    retrieve(index, session, cfg).map(|r| CandidateSet::from_ranking(&r))
}

/// Re-orders the candidates by `qm`. Candidates missing from the index score
/// −∞ and sort last.
pub fn rerank(
    index: &Index,
    candidates: &CandidateSet,
    qm: &QueryModel,
    cfg: &RetrievalConfig,
) -> Result<Ranking> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates(candidates.session_id.clone()));
    }
    if qm.is_empty() {
        return Err(Error::EmptyQueryModel);
    }
    let scorer = Scorer::new(index, qm, cfg.smoothing)?;
    let scored: Vec<(String, f64)> = candidates
        .docnos
        .par_iter()
        .map(|docno| {
            let score = match index.doc_id(docno) {
                Some(id) => scorer.score(id).expect("id from index"),
                None => {
                    warn!(
                        "session {}: candidate {docno} not in index; ranked last",
                        candidates.session_id
                    );
                    f64::NEG_INFINITY
                }
            };
            (docno.clone(), score)
        })
        .collect();
    Ok(Ranking::from_scored(candidates.session_id.clone(), scored))
}

/// TREC run lines `session Q0 docno rank score tag`, six-decimal scores.
pub fn write_run(rankings: &[Ranking], tag: &str) -> Result<String> {
    if tag.is_empty() || tag.chars().any(char::is_whitespace) {
        return Err(Error::InvalidTag(tag.to_string()));
    }
    let mut out = String::new();
    for r in rankings {
        r.validate()?;
        for e in &r.entries {
            let _ = writeln!(
                out,
                "{} Q0 {} {} {:.6} {}",
                r.session_id, e.docno, e.rank, e.score, tag
            );
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunFile {
    pub tag: Option<String>,
    pub rankings: Vec<Ranking>,
}

/// Parses a TREC run. Each session's entries are re-sorted by score (ties by
/// docno) and re-ranked; the rank column is ignored.
pub fn read_run(text: &str) -> Result<RunFile> {
    let mut order: Vec<String> = Vec::new();
    let mut by_session: HashMap<String, Vec<(String, f64)>> = HashMap::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut tag: Option<String> = None;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 6 {
            return Err(Error::RunLine {
                line: line_no,
                message: format!("expected 6 fields, found {}", f.len()),
            });
        }
        let score: f64 = f[4].parse().map_err(|_| Error::RunLine {
            line: line_no,
            message: format!("invalid score {:?}", f[4]),
        })?;
        if score.is_nan() {
            return Err(Error::RunLine {
                line: line_no,
                message: "NaN score".into(),
            });
        }
        if !seen.insert((f[0].to_string(), f[2].to_string())) {
            return Err(Error::RunLine {
                line: line_no,
                message: format!("duplicate docno {} for session {}", f[2], f[0]),
            });
        }
        match &tag {
            None => tag = Some(f[5].to_string()),
            Some(t) if t != f[5] => warn!("run line {line_no}: tag {} differs from {t}", f[5]),
            _ => {}
        }
        if !by_session.contains_key(f[0]) {
            order.push(f[0].to_string());
        }
        by_session
            .entry(f[0].to_string())
            .or_default()
            .push((f[2].to_string(), score));
    }
    let rankings = order
        .into_iter()
        .map(|s| {
            let scored = by_session.remove(&s).unwrap_or_default();
            Ranking::from_scored(s, scored)
        })
        .collect();
    Ok(RunFile { tag, rankings })
}
