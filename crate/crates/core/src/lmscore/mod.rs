//! Dirichlet-smoothed document language models and the log-linear ranking rule
//! `score(d) = Σ_e θ_e · log P(e | d)`.

mod model;

pub use model::{LexEntity, QueryModel};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sessionlog::{ResultEntry, Session};
use crate::textindex::{DocId, Document, Index, TermId};

pub const DEFAULT_MU: f64 = 2500.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingConfig {
    /// Dirichlet pseudo-count μ.
    pub mu: f64,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        SmoothingConfig { mu: DEFAULT_MU }
    }
}

impl SmoothingConfig {
    pub fn new(mu: f64) -> Result<Self> {
        let cfg = SmoothingConfig { mu };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu.is_finite() && self.mu > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("mu must be > 0, got {}", self.mu)))
        }
    }
}

#[derive(Debug, Clone)]
enum Resolved {
    Unigram(Option<TermId>),
    Ngram(Option<Vec<TermId>>, usize),
}

#[derive(Debug, Clone)]
struct ScoredEntity {
    weight: f64,
    resolved: Resolved,
    coll_prob: f64,
}

/// A query model bound to an index: entities are resolved and collection
/// probabilities computed once, then any number of documents can be scored.
#[derive(Debug, Clone)]
pub struct Scorer<'a> {
    index: &'a Index,
    mu: f64,
    entities: Vec<ScoredEntity>,
}

impl<'a> Scorer<'a> {
    pub fn new(index: &'a Index, qm: &QueryModel, cfg: SmoothingConfig) -> Result<Self> {
        cfg.validate()?;
        let entities = qm
            .iter()
            .map(|(e, w)| {
                let (resolved, coll_prob) = match e {
                    LexEntity::Term(t) => {
                        let id = index.term_id(t);
                        let pc = id
                            .map(|id| index.coll_term_prob_id(id))
                            .unwrap_or_else(|| index.oov_floor());
                        (Resolved::Unigram(id), pc)
                    }
                    LexEntity::Ngram(ts) => {
                        let pc = index.coll_phrase_prob(ts)?;
                        (Resolved::Ngram(index.resolve(ts), ts.len()), pc)
                    }
                };
                Ok(ScoredEntity {
                    weight: w,
                    resolved,
                    coll_prob,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Scorer {
            index,
            mu: cfg.mu,
            entities,
        })
    }

    fn prob(&self, e: &ScoredEntity, doc: &Document) -> f64 {
        let (freq, units) = match &e.resolved {
            Resolved::Unigram(id) => (
                id.map(|t| doc.term_freq(t)).unwrap_or(0),
                u64::from(doc.length()),
            ),
            Resolved::Ngram(ids, n) => (
                ids.as_deref().map(|ids| doc.phrase_freq_ids(ids)).unwrap_or(0),
                (u64::from(doc.length()) + 1).saturating_sub(*n as u64),
            ),
        };
        (f64::from(freq) + self.mu * e.coll_prob) / (units as f64 + self.mu)
    }

    /// `log P(e | d)` for every entity, in query-model order.
    pub fn log_probs(&self, doc: DocId) -> Result<Vec<f64>> {
        let d = self.index.doc(doc)?;
        Ok(self.entities.iter().map(|e| self.prob(e, d).ln()).collect())
    }

    pub fn score(&self, doc: DocId) -> Result<f64> {
        let d = self.index.doc(doc)?;
        Ok(self.score_document(d))
    }

    pub(crate) fn score_document(&self, d: &Document) -> f64 {
        let mut acc = 0.0;
        for e in &self.entities {
            acc += e.weight * self.prob(e, d).ln();
        }
        acc
    }
}

/// Dirichlet-smoothed P(entity | doc).
pub fn doc_prob(index: &Index, doc: DocId, entity: &LexEntity, cfg: SmoothingConfig) -> Result<f64> {
    let mut qm = QueryModel::new();
    qm.set(entity.clone(), 1.0);
    let scorer = Scorer::new(index, &qm, cfg)?;
    let d = index.doc(doc)?;
    Ok(scorer.prob(&scorer.entities[0], d))
}

/// `Σ_e θ_e log P(e | d)` for a non-empty query model.
pub fn score(index: &Index, doc: DocId, qm: &QueryModel, cfg: SmoothingConfig) -> Result<f64> {
    if qm.is_empty() {
        return Err(Error::EmptyQueryModel);
    }
    Scorer::new(index, qm, cfg)?.score(doc)
}

/// `ln((N + 1) / (df + 0.5))`.
pub fn idf(index: &Index, term: &str) -> f64 {
    let n = f64::from(index.stats().num_docs);
    let df = f64::from(index.doc_freq(term));
    ((n + 1.0) / (df + 0.5)).ln()
}

/// Which previous-page documents stand in for P(t | ·) in QCM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorDocSource {
    /// SAT-clicked documents, falling back to the top-ranked result.
    #[default]
    SatClicks,
    /// Always the top-ranked result.
    TopDocument,
}

/// Result entries of interaction `i` (1-based) that P(t | ·) is estimated from.
pub fn reference_entries(
    session: &Session,
    i: usize,
    source: PriorDocSource,
) -> Result<Vec<&ResultEntry>> {
    if i == 0 || i > session.history.len() {
        return Err(Error::InteractionOutOfRange {
            session: session.session_id.clone(),
            index: i,
            len: session.history.len(),
        });
    }
    let serp = &session.history[i - 1].serp;
    if source == PriorDocSource::SatClicks {
        let sat: Vec<&ResultEntry> = serp.iter().filter(|r| r.sat_click).collect();
        if !sat.is_empty() {
            return Ok(sat);
        }
    }
    Ok(serp.first().into_iter().collect())
}

/// Maximum-likelihood probability of `term` in the concatenated reference
/// documents of interaction `i`. Documents missing from the index are ignored;
/// 0 if none is indexed.
pub fn sat_prob(
    index: &Index,
    session: &Session,
    i: usize,
    term: &str,
    source: PriorDocSource,
) -> Result<f64> {
    let entries = reference_entries(session, i, source)?;
    let tid = index.term_id(term);
    let (mut hits, mut len) = (0u64, 0u64);
    for e in entries {
        if let Some(d) = index.doc_id(&e.docno) {
            let doc = index.doc(d)?;
            hits += tid.map(|t| u64::from(doc.term_freq(t))).unwrap_or(0);
            len += u64::from(doc.length());
        }
    }
    Ok(if len == 0 { 0.0 } else { hits as f64 / len as f64 })
}

/// Whether `term` occurs in the reference documents of interaction `i`.
///
/// Tested on the indexed documents when any is indexed, otherwise on the
/// logged titles and snippets.
pub fn term_in_reference(
    index: &Index,
    session: &Session,
    i: usize,
    term: &str,
    source: PriorDocSource,
) -> Result<bool> {
    let entries = reference_entries(session, i, source)?;
    let indexed: Vec<DocId> = entries.iter().filter_map(|e| index.doc_id(&e.docno)).collect();
    if !indexed.is_empty() {
        let Some(t) = index.term_id(term) else {
            return Ok(false);
        };
        for d in indexed {
            if index.doc(d)?.term_freq(t) > 0 {
                return Ok(true);
            }
        }
        return Ok(false);
    }
    let tok = index.tokenizer();
    Ok(entries.iter().any(|e| {
        tok.tokenize(&e.title)
            .into_iter()
            .chain(tok.tokenize(&e.snippet))
            .any(|t| t == term)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sessionlog::{Interaction, Query};
    use crate::textindex::{build_index, CorpusRecord, Tokenizer, TokenizerConfig};
    use proptest::prelude::*;

    fn index(docs: &[(&str, &str)]) -> Index {
        build_index(
            docs.iter().map(|(d, t)| CorpusRecord::new(*d, *t)),
            None,
            70,
            TokenizerConfig::default(),
        )
        .unwrap()
        .0
    }

    /// Corpus where term `x` has P_c = 0.01 and doc `d` has |d| = 10.
    fn calibrated(tf_in_d: usize) -> Index {
        // total_terms = 1000, cf(x) = 10.
        let mut d = vec!["x"; tf_in_d];
        d.resize(10, "pad");
        let mut other = vec!["x"; 10 - tf_in_d];
        other.resize(990, "filler");
        index(&[("d", &d.join(" ")), ("e", &other.join(" "))])
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn dirichlet_examples() {
        let cfg = SmoothingConfig::default();
        let x = LexEntity::term("x");
        let idx = calibrated(2);
        let d = idx.doc_id("d").unwrap();
        assert_eq!(idx.coll_term_prob("x"), 0.01);
        let p = doc_prob(&idx, d, &x, cfg).unwrap();
        assert!(close(p, 27.0 / 2510.0, 1e-15));
        assert!(close(p, 0.0107569, 1e-7));

        let idx0 = calibrated(0);
        let p0 = doc_prob(&idx0, idx0.doc_id("d").unwrap(), &x, cfg).unwrap();
        assert!(close(p0, 25.0 / 2510.0, 1e-15));
        assert!(close(p0, 0.0099602, 1e-7));

        let ml = doc_prob(&idx, d, &x, SmoothingConfig::new(1e-9).unwrap()).unwrap();
        assert!(close(ml, 0.2, 1e-9));
    }

    #[test]
    fn score_examples() {
        let cfg = SmoothingConfig { mu: 1e-12 };
        // P(a|d1) = 0.01 in the ML limit.
        let mut text = vec!["b"; 99];
        text.push("a");
        let idx = index(&[("d1", &text.join(" "))]);
        let d = idx.doc_id("d1").unwrap();
        let s = score(&idx, d, &QueryModel::from_terms([("a", 1.0)]), cfg).unwrap();
        assert!(close(s, (0.01f64).ln(), 1e-9));
        assert!(close(s, -4.60517, 1e-5));
        let neg = score(&idx, d, &QueryModel::from_terms([("a", -1.0)]), cfg).unwrap();
        assert!(close(neg, 4.60517, 1e-5));

        let cfg = SmoothingConfig::default();
        let sa = score(&idx, d, &QueryModel::from_terms([("a", 1.0)]), cfg).unwrap();
        let sb = score(&idx, d, &QueryModel::from_terms([("b", 1.0)]), cfg).unwrap();
        let sab = score(&idx, d, &QueryModel::from_terms([("a", 1.0), ("b", 1.0)]), cfg).unwrap();
        assert!(close(sab, sa + sb, 1e-12));
        assert!(matches!(
            score(&idx, d, &QueryModel::new(), cfg),
            Err(Error::EmptyQueryModel)
        ));
        assert!(matches!(
            score(&idx, DocId(5), &QueryModel::from_terms([("a", 1.0)]), cfg),
            Err(Error::UnknownDoc(_))
        ));
    }

    #[test]
    fn ngram_prob_uses_window_counts() {
        let idx = index(&[("d1", "a b a b"), ("d2", "c c")]);
        let cfg = SmoothingConfig { mu: 10.0 };
        let ab = LexEntity::ngram(["a", "b"]);
        // windows: 3 + 1 = 4, hits 2 → P_c = 0.5; in d1 pf=2 over 3 windows.
        let p = doc_prob(&idx, idx.doc_id("d1").unwrap(), &ab, cfg).unwrap();
        assert!(close(p, (2.0 + 10.0 * 0.5) / (3.0 + 10.0), 1e-15));
    }

    #[test]
    fn idf_examples() {
        // Build N=1000 with df(t)=100 cheaply.
        let docs: Vec<(String, String)> = (0..1000)
            .map(|i| (format!("d{i:04}"), if i < 100 { "t".into() } else { "u".into() }))
            .collect();
        let refs: Vec<(&str, &str)> = docs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let idx = index(&refs);
        assert!(close(idf(&idx, "t"), (1001.0f64 / 100.5).ln(), 1e-15));
        assert!(close(idf(&idx, "t"), 2.298597, 1e-6));
        // ln(1001 / 0.5) = ln(2002)
        assert!(close(idf(&idx, "absent"), 7.601902, 1e-6));
        let one = index(&[("d", "t")]);
        assert!(close(idf(&one, "t"), 0.287682, 1e-6));
    }

    fn session_with(serp: Vec<ResultEntry>) -> Session {
        let tok = Tokenizer::default();
        Session {
            session_id: "s".into(),
            topic_id: None,
            history: vec![Interaction {
                query: Query::new("q", &tok),
                serp,
            }],
            current_query: Query::new("q2", &tok),
        }
    }

    fn entry(docno: &str, rank: u32, clicked: bool, sat: bool, snippet: &str) -> ResultEntry {
        ResultEntry {
            docno: docno.into(),
            rank,
            url: String::new(),
            title: String::new(),
            snippet: snippet.into(),
            clicked,
            sat_click: sat,
        }
    }

    #[test]
    fn sat_prob_rules() {
        let idx = index(&[("d1", "a b"), ("d2", "a a b")]);
        let src = PriorDocSource::SatClicks;
        let s = session_with(vec![entry("d1", 1, false, false, ""), entry("d2", 2, true, true, "")]);
        assert!(close(sat_prob(&idx, &s, 1, "a", src).unwrap(), 2.0 / 3.0, 1e-15));
        assert!(close(
            sat_prob(&idx, &s, 1, "b", PriorDocSource::TopDocument).unwrap(),
            0.5,
            1e-15
        ));
        let s = session_with(vec![entry("d1", 1, false, false, ""), entry("d2", 2, true, false, "")]);
        assert!(close(sat_prob(&idx, &s, 1, "b", src).unwrap(), 0.5, 1e-15));
        assert_eq!(sat_prob(&idx, &s, 1, "zzz", src).unwrap(), 0.0);
        assert!(matches!(
            sat_prob(&idx, &s, 2, "a", src),
            Err(Error::InteractionOutOfRange { .. })
        ));

        let s = session_with(vec![entry("web1", 1, false, false, "Jaguar prices")]);
        assert_eq!(sat_prob(&idx, &s, 1, "jaguar", src).unwrap(), 0.0);
        assert!(term_in_reference(&idx, &s, 1, "jaguar", src).unwrap());
        assert!(!term_in_reference(&idx, &s, 1, "a", src).unwrap());
    }

    fn toy_corpus() -> impl Strategy<Value = Vec<String>> {
        prop::collection::vec(
            prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 0..30)
                .prop_map(|w| w.join(" ")),
            1..8,
        )
    }

    proptest! {
        #[test]
        fn unigram_probs_sum_to_one(texts in toy_corpus(), mu in 0.5f64..5000.0) {
            let docs: Vec<(String, &str)> = texts.iter().enumerate().map(|(i, t)| (format!("d{i}"), t.as_str())).collect();
            let refs: Vec<(&str, &str)> = docs.iter().map(|(a, b)| (a.as_str(), *b)).collect();
            let idx = index(&refs);
            let cfg = SmoothingConfig { mu };
            for id in 0..idx.num_docs() {
                let total: f64 = idx.vocab().iter()
                    .map(|t| doc_prob(&idx, DocId(id as u32), &LexEntity::term(t.clone()), cfg).unwrap())
                    .sum();
                if idx.vocab().is_empty() { continue; }
                prop_assert!((total - 1.0).abs() < 1e-9, "sum {}", total);
            }
        }

        #[test]
        fn tf_monotonicity(extra in 1usize..20, base in 0usize..10) {
            let mk = |n: usize| {
                let mut w = vec!["a"; n];
                w.extend(vec!["b"; 30]);
                w.join(" ")
            };
            let low = mk(base);
            let high = mk(base + extra);
            // Same document length so only tf changes.
            let low = format!("{low} {}", vec!["c"; extra].join(" "));
            let idx = index(&[("d1", &low), ("d2", &high)]);
            let cfg = SmoothingConfig::default();
            let a = LexEntity::term("a");
            let p1 = doc_prob(&idx, idx.doc_id("d1").unwrap(), &a, cfg).unwrap();
            let p2 = doc_prob(&idx, idx.doc_id("d2").unwrap(), &a, cfg).unwrap();
            prop_assert!(p2 > p1);
            prop_assert!(p1 > 0.0 && p2 < 1.0);
        }
    }
}
