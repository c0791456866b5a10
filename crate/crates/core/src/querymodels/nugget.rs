//! Nugget: query n-grams confirmed by the previous result page are added to
//! the TF model with a small weight.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use super::tf::{aggregate, tf_model, AggregationScheme};
use crate::error::{Error, Result};
use crate::lmscore::{LexEntity, QueryModel};
use crate::sessionlog::{ResultEntry, Session};
use crate::textindex::{Index, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NuggetVariant {
    /// Snippets of the previous page only.
    Rl2,
    /// Snippets plus anchor texts of the same documents.
    Rl3,
    /// Snippets of clicked results only (all snippets when nothing was clicked).
    Rl4,
}

/// When an n-gram counts as confirmed by the expansion units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AcceptanceRule {
    /// Fraction of units containing the n-gram must reach `theta`.
    Coverage,
    /// At least this many units must contain the n-gram.
    MinCount { count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuggetParams {
    pub k_snippet: usize,
    pub theta: f64,
    pub k_anchor: usize,
    pub beta: f64,
    pub variant: NuggetVariant,
    /// Longest n-gram considered (capped by the query length).
    pub max_order: usize,
    pub acceptance: AcceptanceRule,
}

impl Default for NuggetParams {
    fn default() -> Self {
        NuggetParams {
            k_snippet: 10,
            theta: 0.97,
            k_anchor: 5,
            beta: 0.1,
            variant: NuggetVariant::Rl2,
            max_order: 3,
            acceptance: AcceptanceRule::Coverage,
        }
    }
}

impl NuggetParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return bad(format!("nugget theta must be in (0, 1], got {}", self.theta));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return bad(format!("nugget beta must be in [0, 1], got {}", self.beta));
        }
        if self.k_snippet == 0 || self.k_anchor == 0 {
            return bad("nugget k_snippet and k_anchor must be >= 1".into());
        }
        if self.max_order < 2 {
            return bad(format!("nugget max_order must be >= 2, got {}", self.max_order));
        }
        Ok(())
    }
}

/// Anchor strings pointing at each document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnchorTexts {
    anchors: BTreeMap<String, Vec<String>>,
}

#[derive(Deserialize, Serialize)]
struct AnchorLine {
    docno: String,
    anchors: Vec<String>,
}

impl AnchorTexts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, docno: impl Into<String>, anchors: Vec<String>) {
        self.anchors.entry(docno.into()).or_default().extend(anchors);
    }

    pub fn get(&self, docno: &str) -> &[String] {
        self.anchors.get(docno).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    /// JSON lines `{"docno": .., "anchors": [..]}`.
    pub fn parse_jsonl(text: &str) -> Result<Self> {
        let mut out = AnchorTexts::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: AnchorLine = serde_json::from_str(line).map_err(|e| Error::AnchorLine {
                line: i + 1,
                message: e.to_string(),
            })?;
            out.insert(rec.docno, rec.anchors);
        }
        Ok(out)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_jsonl(&text)
    }

    pub fn to_jsonl(&self) -> String {
        self.anchors
            .iter()
            .map(|(d, a)| {
                let line = AnchorLine {
                    docno: d.clone(),
                    anchors: a.clone(),
                };
                serde_json::to_string(&line).expect("anchors serialize") + "\n"
            })
            .collect()
    }
}

/// One expansion unit per result document; segments are matched separately so
/// n-grams never span a snippet/anchor boundary.
type Unit = Vec<Vec<Term>>;

fn contains(segment: &[Term], gram: &[Term]) -> bool {
    segment.windows(gram.len()).any(|w| w == gram)
}

fn expansion_units(
    index: &Index,
    serp: &[ResultEntry],
    params: &NuggetParams,
    variant: NuggetVariant,
    anchors: Option<&AnchorTexts>,
) -> Vec<Unit> {
    let tok = index.tokenizer();
    let top: Vec<&ResultEntry> = serp.iter().take(params.k_snippet).collect();
    let picked: Vec<&ResultEntry> = match variant {
        NuggetVariant::Rl4 if top.iter().any(|r| r.clicked) => {
            top.into_iter().filter(|r| r.clicked).collect()
        }
        _ => top,
    };
    picked
        .into_iter()
        .map(|r| {
            let mut unit = vec![tok.tokenize(&r.snippet)];
            if let (NuggetVariant::Rl3, Some(a)) = (variant, anchors) {
                unit.extend(a.get(&r.docno).iter().take(params.k_anchor).map(|s| tok.tokenize(s)));
            }
            unit
        })
        .collect()
}

/// Distinct contiguous n-grams of the query with 2 ≤ n ≤ `max_order`.
fn query_ngrams(terms: &[Term], max_order: usize) -> BTreeSet<Vec<Term>> {
    let top = max_order.min(terms.len());
    (2..=top)
        .flat_map(|n| terms.windows(n).map(<[Term]>::to_vec))
        .collect()
}

fn accepted(units: &[Unit], gram: &[Term], params: &NuggetParams) -> bool {
    if units.is_empty() {
        return false;
    }
    let hits = units
        .iter()
        .filter(|u| u.iter().any(|seg| contains(seg, gram)))
        .count();
    match params.acceptance {
        AcceptanceRule::Coverage => hits as f64 / units.len() as f64 >= params.theta,
        AcceptanceRule::MinCount { count } => hits >= count,
    }
}

/// Per-interaction TF plus accepted n-grams (weight β), aggregated uniformly.
///
/// The expansion for q_i is mined from page r_{i−1}; q_1 has none. RL3 without
/// anchors degrades to RL2.
pub fn nugget_model(
    index: &Index,
    session: &Session,
    params: &NuggetParams,
    anchors: Option<&AnchorTexts>,
) -> Result<QueryModel> {
    params.validate()?;
    let mut variant = params.variant;
    if variant == NuggetVariant::Rl3 && anchors.is_none() {
        warn!(
            "session {}: RL3 requested without anchor texts; using RL2",
            session.session_id
        );
        variant = NuggetVariant::Rl2;
    }
    let mut models = Vec::with_capacity(session.len());
    for i in 1..=session.len() {
        let q = session.query(i).expect("in range");
        if q.is_empty() {
            continue;
        }
        let mut qm = tf_model(q)?;
        if i >= 2 && params.beta != 0.0 {
            let units = expansion_units(index, &session.history[i - 2].serp, params, variant, anchors);
            for gram in query_ngrams(&q.terms, params.max_order) {
                if accepted(&units, &gram, params) {
                    qm.add(LexEntity::Ngram(gram), params.beta);
                }
            }
        }
        models.push(qm);
    }
    aggregate(&models, AggregationScheme::Uniform)
}
