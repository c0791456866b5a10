//! Upper bounds on re-ranking: the ground-truth ordering of a candidate set,
//! and the best NDCG@10 reachable by re-weighting the session's query terms.
//!
//! The grid search walks an integer lattice (weight = k / scale) so every
//! point is exact and enumeration order is fixed. Assignment a encodes one
//! digit per term, first term most significant, so increasing a is
//! lexicographic order on the weight vector. The first strict maximum wins.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lmscore::{LexEntity, QueryModel, Scorer, SmoothingConfig};
use crate::metrics::{dcg, gain, has_positive, ideal_dcg, NDCG_K};
use crate::ranker::{CandidateSet, Ranking};
use crate::sessionlog::{Judgments, Session};
use crate::textindex::{Index, Term};

/// Candidates by judged gain, ties by docno. Scores are the gains.
pub fn ground_truth_rank(candidates: &CandidateSet, judgments: &Judgments) -> Ranking {
    Ranking::from_scored(
        candidates.session_id.clone(),
        candidates
            .docnos
            .iter()
            .map(|d| (d.clone(), gain(judgments, d)))
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    pub max_unique_terms: usize,
    pub max_assignments: u64,
    /// Candidates beyond this first-pass rank are not re-ranked.
    pub max_candidates: Option<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            lo: -1.0,
            hi: 1.0,
            step: 0.1,
            max_unique_terms: 7,
            max_assignments: 10_000_000,
            max_candidates: None,
        }
    }
}

const MAX_DECIMALS: u32 = 6;

/// The grid as integers: points `lo + i·step` for `i < len`, all over `scale`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lattice {
    pub lo: i64,
    pub step: i64,
    pub len: usize,
    pub scale: i64,
}

impl Lattice {
    pub fn weight(&self, digit: usize) -> f64 {
        (self.lo + digit as i64 * self.step) as f64 / self.scale as f64
    }

    fn is_zero(&self, digit: usize) -> bool {
        self.lo + digit as i64 * self.step == 0
    }
}

impl GridConfig {
    pub fn lattice(&self) -> Result<Lattice> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.lo.is_finite() && self.hi.is_finite() && self.step.is_finite()) {
            return bad("grid bounds and step must be finite".into());
        }
        if self.lo >= self.hi {
            return bad(format!("grid lo {} must be below hi {}", self.lo, self.hi));
        }
        if self.step <= 0.0 {
            return bad(format!("grid step {} must be positive", self.step));
        }
        if self.max_unique_terms == 0 || self.max_assignments == 0 {
            return bad("grid term and assignment caps must be positive".into());
        }
        let on_lattice = |x: f64, s: f64| ((x * s).round() - x * s).abs() < 1e-9 * s.max(1.0);
        let scale = (0..=MAX_DECIMALS)
            .map(|d| 10f64.powi(d as i32))
            .find(|&s| [self.lo, self.hi, self.step].iter().all(|&x| on_lattice(x, s)));
        let Some(scale) = scale else {
            return bad(format!(
                "grid values need at most {MAX_DECIMALS} decimal places"
            ));
        };
        let lo = (self.lo * scale).round() as i64;
        let hi = (self.hi * scale).round() as i64;
        let step = (self.step * scale).round() as i64;
        Ok(Lattice {
            lo,
            step,
            len: ((hi - lo) / step) as usize + 1,
            scale: scale as i64,
        })
    }

    pub fn grid_size(&self) -> Result<usize> {
        self.lattice().map(|l| l.len)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub session_id: String,
    pub terms: Vec<Term>,
    pub best_weights: QueryModel,
    pub best_ndcg: f64,
    /// Lattice points tried: grid size ^ terms.
    pub assignments_evaluated: u64,
    /// Extra off-lattice models tried after the lattice.
    pub probes_evaluated: u64,
    pub best_from_probe: bool,
    pub candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum SkipReason {
    NoQueryTerms,
    TooManyTerms { terms: usize, max: usize },
    TooManyAssignments { assignments: u64, max: u64 },
    NoPositiveJudgments,
    NoCandidates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum GridOutcome {
    Searched(GridResult),
    Skipped {
        session_id: String,
        #[serde(flatten)]
        reason: SkipReason,
    },
}

/// Unique unigram terms of all the session's queries, sorted.
pub fn session_terms(session: &Session) -> Vec<Term> {
    let set: BTreeSet<&Term> = session.queries().flat_map(|q| q.terms.iter()).collect();
    set.into_iter().cloned().collect()
}

/// Precomputed per-candidate log probabilities and gains; evaluates a weight
/// vector exactly as `rerank` + `ndcg_at_k` would.
struct Evaluator {
    /// Row-major `ln P(term | candidate)`, candidates in docno order.
    logp: Vec<f64>,
    /// False for candidates missing from the index; they score −∞.
    present: Vec<bool>,
    gains: Vec<f64>,
    n_terms: usize,
    idcg: f64,
}

impl Evaluator {
    fn new(
        index: &Index,
        terms: &[Term],
        docnos: &[String],
        judgments: &Judgments,
        smoothing: SmoothingConfig,
    ) -> Result<Self> {
        let probe = QueryModel::from_terms(terms.iter().map(|t| (t.as_str(), 1.0)));
        let scorer = Scorer::new(index, &probe, smoothing)?;
        let mut sorted: Vec<&String> = docnos.iter().collect();
        sorted.sort();
        let mut logp = Vec::with_capacity(sorted.len() * terms.len());
        let mut present = Vec::with_capacity(sorted.len());
        for d in &sorted {
            match index.doc_id(d) {
                Some(id) => {
                    logp.extend(scorer.log_probs(id)?);
                    present.push(true);
                }
                None => {
                    logp.extend(std::iter::repeat_n(0.0, terms.len()));
                    present.push(false);
                }
            }
        }
        Ok(Evaluator {
            logp,
            present,
            gains: sorted.iter().map(|d| gain(judgments, d)).collect(),
            n_terms: terms.len(),
            idcg: ideal_dcg(judgments, NDCG_K),
        })
    }

    /// NDCG@10 of the candidates ranked by `Σ w_j log p_j` (zero weights skipped).
    fn ndcg(&self, weights: &[f64], top: &mut Vec<(f64, usize)>) -> f64 {
        top.clear();
        for c in 0..self.present.len() {
            let score = if self.present[c] {
                let row = &self.logp[c * self.n_terms..(c + 1) * self.n_terms];
                let mut acc = 0.0;
                for (w, lp) in weights.iter().zip(row) {
                    if *w != 0.0 {
                        acc += w * lp;
                    }
                }
                acc
            } else {
                f64::NEG_INFINITY
            };
            // Keep the best NDCG_K by (score desc, docno asc); candidates
            // arrive in docno order so equal scores never displace.
            if top.len() == NDCG_K && score <= top[NDCG_K - 1].0 {
                continue;
            }
            let pos = top.partition_point(|&(s, _)| s >= score);
            top.insert(pos, (score, c));
            top.truncate(NDCG_K);
        }
        let dcg = dcg(top.iter().map(|&(_, c)| self.gains[c]), NDCG_K);
        (dcg / self.idcg).min(1.0)
    }
}

/// Exhaustive term-weight search over the lattice, plus optional probe
/// models that win only when strictly better than the lattice optimum.
pub fn ideal_weights(
    index: &Index,
    session: &Session,
    candidates: &CandidateSet,
    judgments: &Judgments,
    grid: &GridConfig,
    smoothing: SmoothingConfig,
    probes: &[QueryModel],
) -> Result<GridOutcome> {
    let lattice = grid.lattice()?;
    let skip = |reason| {
        Ok(GridOutcome::Skipped {
            session_id: session.session_id.clone(),
            reason,
        })
    };
    let terms = session_terms(session);
    if terms.is_empty() {
        return skip(SkipReason::NoQueryTerms);
    }
    if terms.len() > grid.max_unique_terms {
        return skip(SkipReason::TooManyTerms {
            terms: terms.len(),
            max: grid.max_unique_terms,
        });
    }
    let assignments = (lattice.len as u64).checked_pow(terms.len() as u32);
    match assignments {
        Some(a) if a <= grid.max_assignments => {}
        _ => {
            return skip(SkipReason::TooManyAssignments {
                assignments: assignments.unwrap_or(u64::MAX),
                max: grid.max_assignments,
            })
        }
    }
    let assignments = assignments.expect("checked");
    if !has_positive(judgments) {
        return skip(SkipReason::NoPositiveJudgments);
    }
    let cands = match grid.max_candidates {
        Some(n) => candidates.truncated(n),
        None => candidates.clone(),
    };
    if cands.is_empty() {
        return skip(SkipReason::NoCandidates);
    }
    let eval = Evaluator::new(index, &terms, &cands.docnos, judgments, smoothing)?;
    let t = terms.len();
    let decode = |mut a: u64, digits: &mut [usize]| {
        for d in digits.iter_mut().rev() {
            *d = (a % lattice.len as u64) as usize;
            a /= lattice.len as u64;
        }
    };

    const CHUNK: u64 = 4096;
    let chunks = assignments.div_ceil(CHUNK);
    let (best_ndcg, best_a) = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut digits = vec![0usize; t];
            let mut weights = vec![0.0; t];
            let mut top = Vec::with_capacity(NDCG_K + 1);
            let mut best = (f64::NEG_INFINITY, u64::MAX);
            let start = ci * CHUNK;
            decode(start, &mut digits);
            for a in start..(start + CHUNK).min(assignments) {
                for (w, &d) in weights.iter_mut().zip(&digits) {
                    *w = if lattice.is_zero(d) { 0.0 } else { lattice.weight(d) };
                }
                let v = eval.ndcg(&weights, &mut top);
                if v > best.0 {
                    best = (v, a);
                }
                // Odometer increment.
                for d in digits.iter_mut().rev() {
                    *d += 1;
                    if *d < lattice.len {
                        break;
                    }
                    *d = 0;
                }
            }
            best
        })
        .reduce(
            || (f64::NEG_INFINITY, u64::MAX),
            |x, y| if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x },
        );

    let mut digits = vec![0usize; t];
    decode(best_a, &mut digits);
    let mut best_weights = QueryModel::new();
    for (term, &d) in terms.iter().zip(&digits) {
        if !lattice.is_zero(d) {
            best_weights.set(LexEntity::Term(term.clone()), lattice.weight(d));
        }
    }
    let mut result = GridResult {
        session_id: session.session_id.clone(),
        terms: terms.clone(),
        best_weights,
        best_ndcg,
        assignments_evaluated: assignments,
        probes_evaluated: 0,
        best_from_probe: false,
        candidates: cands.len(),
    };

    let mut top = Vec::with_capacity(NDCG_K + 1);
    for p in probes {
        let unigram_only = p
            .iter()
            .all(|(e, _)| matches!(e, LexEntity::Term(x) if terms.binary_search(x).is_ok()));
        if !unigram_only {
            log::warn!(
                "session {}: probe model has entities outside the session terms; ignored",
                session.session_id
            );
            continue;
        }
        let weights: Vec<f64> = terms.iter().map(|x| p.weight_of_term(x)).collect();
        let v = eval.ndcg(&weights, &mut top);
        result.probes_evaluated += 1;
        if v > result.best_ndcg {
            result.best_ndcg = v;
            result.best_weights = p.clone();
            result.best_from_probe = true;
        }
    }
    Ok(GridOutcome::Searched(result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ndcg_at_k;
    use crate::querymodels::{tf_session_model, TfScope};
    use crate::ranker::{rerank, RetrievalConfig};
    use crate::sessionlog::{Interaction, Query};
    use crate::textindex::{build_index, CorpusRecord, Tokenizer};

    fn judg(pairs: &[(&str, i32)]) -> Judgments {
        pairs.iter().map(|(d, g)| (d.to_string(), *g)).collect()
    }

    fn cands(docnos: &[&str]) -> CandidateSet {
        CandidateSet {
            session_id: "s".into(),
            docnos: docnos.iter().map(|d| d.to_string()).collect(),
        }
    }

    fn session(queries: &[&str]) -> Session {
        let tok = Tokenizer::default();
        let (cur, hist) = queries.split_last().unwrap();
        Session {
            session_id: "s".into(),
            topic_id: None,
            history: hist
                .iter()
                .map(|q| Interaction {
                    query: Query::new(q, &tok),
                    serp: vec![],
                })
                .collect(),
            current_query: Query::new(cur, &tok),
        }
    }

    fn index(docs: &[(&str, &str)]) -> Index {
        build_index(
            docs.iter().map(|(d, t)| CorpusRecord::new(*d, *t)),
            None,
            70,
            Default::default(),
        )
        .unwrap()
        .0
    }

    #[test]
    fn ground_truth_examples() {
        let j = judg(&[("d1", 0), ("d2", 2), ("d3", 1)]);
        let r = ground_truth_rank(&cands(&["d1", "d2", "d3"]), &j);
        assert_eq!(r.docnos().collect::<Vec<_>>(), vec!["d2", "d3", "d1"]);
        let r = ground_truth_rank(&cands(&["c", "a", "b"]), &judg(&[]));
        assert_eq!(r.docnos().collect::<Vec<_>>(), vec!["a", "b", "c"]);
        let j = judg(&[("a", 1), ("b", 3), ("zz", -2)]);
        let r = ground_truth_rank(&cands(&["x", "a", "y", "b", "zz"]), &j);
        assert_eq!(ndcg_at_k(&r, &j, 10), Some(1.0));
    }

    #[test]
    fn lattice_from_config() {
        let l = GridConfig::default().lattice().unwrap();
        assert_eq!(l, Lattice { lo: -10, step: 1, len: 21, scale: 10 });
        assert_eq!(l.weight(0), -1.0);
        assert_eq!(l.weight(11), 0.1);
        assert!(l.is_zero(10));
        let coarse = GridConfig { step: 0.5, ..Default::default() }.lattice().unwrap();
        assert_eq!(coarse.len, 5);
        let odd = GridConfig { lo: 0.0, hi: 1.0, step: 0.3, ..Default::default() }.lattice().unwrap();
        assert_eq!(odd.len, 4);
        for bad in [
            GridConfig { lo: 1.0, hi: 1.0, ..Default::default() },
            GridConfig { step: 0.0, ..Default::default() },
            GridConfig { step: 1e-9, ..Default::default() },
            GridConfig { max_unique_terms: 0, ..Default::default() },
        ] {
            assert!(bad.lattice().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn one_term_reports_smallest_positive_weight() {
        let idx = index(&[("rel", "jaguar speed"), ("non", "other words")]);
        let s = session(&["jaguar"]);
        let j = judg(&[("rel", 1)]);
        let out = ideal_weights(&idx, &s, &cands(&["non", "rel"]), &j, &GridConfig::default(), Default::default(), &[]).unwrap();
        let GridOutcome::Searched(r) = out else { panic!("{out:?}") };
        assert_eq!(r.best_ndcg, 1.0);
        assert_eq!(r.best_weights, QueryModel::from_terms([("jaguar", 0.1)]));
        assert_eq!(r.assignments_evaluated, 21);
    }

    #[test]
    fn two_terms_enumerate_441() {
        let idx = index(&[("a", "x y"), ("b", "y y"), ("c", "x")]);
        let s = session(&["x", "y"]);
        let j = judg(&[("b", 1), ("c", 2)]);
        let out = ideal_weights(&idx, &s, &cands(&["a", "b", "c"]), &j, &GridConfig::default(), Default::default(), &[]).unwrap();
        let GridOutcome::Searched(r) = out else { panic!() };
        assert_eq!(r.assignments_evaluated, 441);
        // The reported weights reproduce the reported NDCG through rerank.
        let rr = rerank(&idx, &cands(&["a", "b", "c"]), &r.best_weights, &RetrievalConfig::default()).unwrap();
        assert_eq!(ndcg_at_k(&rr, &j, 10), Some(r.best_ndcg));
    }

    #[test]
    fn skips_and_probes() {
        let idx = index(&[("a", "p q r"), ("b", "q")]);
        let j = judg(&[("b", 1)]);
        let c = cands(&["a", "b"]);
        let g = GridConfig { max_unique_terms: 2, ..Default::default() };
        let out = ideal_weights(&idx, &session(&["p q", "r"]), &c, &j, &g, Default::default(), &[]).unwrap();
        assert!(matches!(out, GridOutcome::Skipped { reason: SkipReason::TooManyTerms { terms: 3, max: 2 }, .. }));
        let g = GridConfig { max_assignments: 400, ..Default::default() };
        let out = ideal_weights(&idx, &session(&["p q"]), &c, &j, &g, Default::default(), &[]).unwrap();
        assert!(matches!(out, GridOutcome::Skipped { reason: SkipReason::TooManyAssignments { assignments: 441, .. }, .. }));
        let out = ideal_weights(&idx, &session(&["p"]), &c, &judg(&[("a", 0)]), &GridConfig::default(), Default::default(), &[]).unwrap();
        assert!(matches!(out, GridOutcome::Skipped { reason: SkipReason::NoPositiveJudgments, .. }));

        let s = session(&["q", "q p"]);
        let tf = tf_session_model(&s, TfScope::AllQueries).unwrap();
        let out = ideal_weights(&idx, &s, &c, &j, &GridConfig::default(), Default::default(), &[tf]).unwrap();
        let GridOutcome::Searched(r) = out else { panic!() };
        assert_eq!(r.probes_evaluated, 1);
        assert!(!r.best_from_probe);
        assert_eq!(r.best_ndcg, 1.0);
    }

    #[test]
    fn matches_rerank_for_every_assignment() {
        let idx = index(&[
            ("d1", "a b c a"),
            ("d2", "b b d"),
            ("d3", "c a d d"),
            ("d4", "a"),
            ("d5", "e f"),
        ]);
        let s = session(&["a b", "c"]);
        let terms = session_terms(&s);
        let docnos = ["d5", "d3", "d1", "d4", "d2", "missing"];
        let c = cands(&docnos);
        let j = judg(&[("d3", 2), ("d2", 1), ("d5", 1)]);
        let eval = Evaluator::new(&idx, &terms, &c.docnos, &j, Default::default()).unwrap();
        let l = GridConfig { step: 0.5, ..Default::default() }.lattice().unwrap();
        let mut top = Vec::new();
        for a in 0..l.len.pow(3) {
            let digits = [a / (l.len * l.len), (a / l.len) % l.len, a % l.len];
            let weights: Vec<f64> = digits.iter().map(|&d| l.weight(d)).collect();
            let qm = QueryModel::from_terms(terms.iter().map(String::as_str).zip(weights.iter().copied()));
            let expected = if qm.is_empty() {
                let mut sorted = docnos.to_vec();
                sorted.sort();
                let r = Ranking::from_scored("s", sorted.iter().map(|d| (d.to_string(), if *d == "missing" { f64::NEG_INFINITY } else { 0.0 })).collect());
                ndcg_at_k(&r, &j, 10).unwrap()
            } else {
                ndcg_at_k(&rerank(&idx, &c, &qm, &RetrievalConfig::default()).unwrap(), &j, 10).unwrap()
            };
            assert_eq!(eval.ndcg(&weights, &mut top), expected, "{weights:?}");
        }
    }
}
