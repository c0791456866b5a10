//! NDCG@k and MRR with linear gain, run-level aggregation, box-plot
//! statistics and the per-length and progressing-session breakdowns.
//!
//! Gain is the judged grade clamped at zero; unjudged documents gain 0. A
//! session without any positive judgment has no ideal ordering and is left
//! out of every mean.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{rank_session, PipelineConfig};
use crate::querymodels::{AnchorTexts, Method};
use crate::ranker::Ranking;
use crate::sessionlog::{HistoryMode, Judgments, Qrels, Session};
use crate::textindex::Index;

pub const NDCG_K: usize = 10;

pub fn gain(judgments: &Judgments, docno: &str) -> f64 {
    judgments.get(docno).map_or(0.0, |&g| f64::from(g.max(0)))
}

pub fn has_positive(judgments: &Judgments) -> bool {
    judgments.values().any(|&g| g > 0)
}

/// `Σ_{r=1..k} g_r / log2(r + 1)` over gains listed in rank order.
pub fn dcg(gains: impl IntoIterator<Item = f64>, k: usize) -> f64 {
    let mut acc = 0.0;
    for (i, g) in gains.into_iter().take(k).enumerate() {
        acc += g / ((i + 2) as f64).log2();
    }
    acc
}

/// DCG of the best possible ordering of every judged document.
pub fn ideal_dcg(judgments: &Judgments, k: usize) -> f64 {
    let mut gains: Vec<f64> = judgments.values().map(|&g| f64::from(g.max(0))).collect();
    gains.sort_by(|a, b| b.total_cmp(a));
    dcg(gains, k)
}

/// `None` when the session has no positively judged document.
pub fn ndcg_at_k(ranking: &Ranking, judgments: &Judgments, k: usize) -> Option<f64> {
    if !has_positive(judgments) || k == 0 {
        return None;
    }
    let idcg = ideal_dcg(judgments, k);
    let dcg = dcg(ranking.entries.iter().map(|e| gain(judgments, &e.docno)), k);
    Some((dcg / idcg).min(1.0))
}

pub fn mrr(ranking: &Ranking, judgments: &Judgments) -> Option<f64> {
    if !has_positive(judgments) {
        return None;
    }
    Some(
        ranking
            .entries
            .iter()
            .position(|e| gain(judgments, &e.docno) > 0.0)
            .map_or(0.0, |i| 1.0 / (i + 1) as f64),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub session_id: String,
    pub ndcg_at_10: f64,
    pub mrr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalOptions {
    /// Score evaluable qrels sessions absent from the run as 0 instead of
    /// skipping them.
    pub missing_as_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub results: Vec<EvalResult>,
    pub mean_ndcg_at_10: Option<f64>,
    pub mean_mrr: Option<f64>,
    /// Run sessions whose judgments hold no positive grade.
    pub excluded: Vec<String>,
    /// Run sessions without any judgments.
    pub unknown: Vec<String>,
    /// Evaluable judged sessions absent from the run.
    pub missing: Vec<String>,
    pub missing_as_zero: bool,
}

impl EvalReport {
    pub fn evaluated(&self) -> usize {
        self.results.len()
    }

    /// Per-session rows `session_id,ndcg10,mrr`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("session_id,ndcg10,mrr\n");
        for r in &self.results {
            let _ = writeln!(out, "{},{:.6},{:.6}", r.session_id, r.ndcg_at_10, r.mrr);
        }
        out
    }
}

pub fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn evaluate_run(rankings: &[Ranking], qrels: &Qrels, opts: EvalOptions) -> EvalReport {
    let mut report = EvalReport {
        missing_as_zero: opts.missing_as_zero,
        ..Default::default()
    };
    let mut in_run = HashSet::new();
    for r in rankings {
        in_run.insert(r.session_id.as_str());
        let Some(j) = qrels.for_session(&r.session_id) else {
            warn!("run session {} has no judgments; skipped", r.session_id);
            report.unknown.push(r.session_id.clone());
            continue;
        };
        match (ndcg_at_k(r, j, NDCG_K), mrr(r, j)) {
            (Some(ndcg), Some(rr)) => report.results.push(EvalResult {
                session_id: r.session_id.clone(),
                ndcg_at_10: ndcg,
                mrr: rr,
            }),
            _ => report.excluded.push(r.session_id.clone()),
        }
    }
    for (sid, j) in qrels.sessions() {
        if in_run.contains(sid) || !has_positive(j) {
            continue;
        }
        report.missing.push(sid.to_string());
        if opts.missing_as_zero {
            report.results.push(EvalResult {
                session_id: sid.to_string(),
                ndcg_at_10: 0.0,
                mrr: 0.0,
            });
        }
    }
    if !report.missing.is_empty() && !opts.missing_as_zero {
        warn!(
            "{} judged sessions missing from run and skipped (first: {})",
            report.missing.len(),
            report.missing[0]
        );
    }
    report.mean_ndcg_at_10 = mean(report.results.iter().map(|r| r.ndcg_at_10));
    report.mean_mrr = mean(report.results.iter().map(|r| r.mrr));
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthGroup {
    pub count: usize,
    pub mean_ndcg_at_10: f64,
}

/// Groups results by session length (number of queries).
pub fn by_session_length(
    results: &[EvalResult],
    sessions: &[Session],
) -> Result<BTreeMap<usize, LengthGroup>> {
    let lengths: HashMap<&str, usize> = sessions
        .iter()
        .map(|s| (s.session_id.as_str(), s.len()))
        .collect();
    let mut sums: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
    for r in results {
        let len = *lengths
            .get(r.session_id.as_str())
            .ok_or_else(|| Error::NotEvaluable(format!("{} (not in session log)", r.session_id)))?;
        let e = sums.entry(len).or_default();
        e.0 += 1;
        e.1 += r.ndcg_at_10;
    }
    Ok(sums
        .into_iter()
        .map(|(len, (count, sum))| {
            (
                len,
                LengthGroup {
                    count,
                    mean_ndcg_at_10: sum / count as f64,
                },
            )
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub mean: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

/// Quantile of sorted data by linear interpolation between closest ranks,
/// position `(n − 1)·p`.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn box_stats(values: &[f64]) -> Result<BoxStats> {
    if values.is_empty() {
        return Err(Error::EmptyInput("box statistics need at least one value"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidConfig("NaN in box statistics input".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let (q1, median, q3) = (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75));
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside = || v.iter().copied().filter(|x| (lo_fence..=hi_fence).contains(x));
    let whisker_low = inside().next().expect("median lies inside the fences");
    let whisker_high = inside().next_back().expect("median lies inside the fences");
    Ok(BoxStats {
        q1,
        median,
        q3,
        mean: mean(v.iter().copied()).expect("non-empty"),
        whisker_low,
        whisker_high,
        outliers: v
            .iter()
            .copied()
            .filter(|x| !(lo_fence..=hi_fence).contains(x))
            .collect(),
    })
}

/// NDCG@10 after each interaction j = 1…L, ranking for q_j with the session
/// truncated at j.
pub fn progressing_session(
    index: &Index,
    session: &Session,
    method: Method,
    judgments: &Judgments,
    mode: HistoryMode,
    cfg: &PipelineConfig,
    anchors: Option<&AnchorTexts>,
) -> Result<Vec<f64>> {
    if !has_positive(judgments) {
        return Err(Error::NotEvaluable(session.session_id.clone()));
    }
    (1..=session.len())
        .map(|j| {
            let truncated = session.truncated(j, mode);
            let out = rank_session(index, &truncated, method, cfg, anchors, Some(judgments))?;
            Ok(ndcg_at_k(&out.ranking, judgments, NDCG_K).expect("positive judgments checked"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranking(docnos: &[&str]) -> Ranking {
        let n = docnos.len();
        Ranking::from_scored(
            "s",
            docnos
                .iter()
                .enumerate()
                .map(|(i, d)| (d.to_string(), (n - i) as f64))
                .collect(),
        )
    }

    fn judg(pairs: &[(&str, i32)]) -> Judgments {
        pairs.iter().map(|(d, g)| (d.to_string(), *g)).collect()
    }

    #[test]
    fn ndcg_examples() {
        let j = judg(&[("a", 1)]);
        assert_eq!(ndcg_at_k(&ranking(&["a", "b"]), &j, 10), Some(1.0));
        let v = ndcg_at_k(&ranking(&["b", "a"]), &j, 10).unwrap();
        assert!((v - 0.63093).abs() < 1e-5);
        assert!((v - 1.0 / 3f64.log2()).abs() < 1e-15);
        let j = judg(&[("a", 3), ("b", 2), ("c", 1), ("x", -2)]);
        assert_eq!(ndcg_at_k(&ranking(&["a", "b", "c", "x"]), &j, 10), Some(1.0));
        assert_eq!(ndcg_at_k(&ranking(&["a"]), &judg(&[("a", 0), ("b", -2)]), 10), None);
        let deep: Vec<String> = (0..12).map(|i| format!("z{i:02}")).collect();
        let mut order: Vec<&str> = deep.iter().map(String::as_str).collect();
        order.push("a");
        assert_eq!(ndcg_at_k(&ranking(&order), &judg(&[("a", 1)]), 10), Some(0.0));
    }

    #[test]
    fn mrr_examples() {
        let j = judg(&[("d", 1), ("x", -1)]);
        assert_eq!(mrr(&ranking(&["x", "b", "c", "d"]), &j), Some(0.25));
        assert_eq!(mrr(&ranking(&["d"]), &j), Some(1.0));
        assert_eq!(mrr(&ranking(&["b"]), &j), Some(0.0));
        assert_eq!(mrr(&ranking(&["b"]), &judg(&[("b", 0)])), None);
    }

    #[test]
    fn evaluate_run_examples() {
        let mut q = Qrels::new();
        q.insert("s1", "a", 1);
        q.insert("s2", "a", 1);
        q.insert("s3", "a", 0);
        q.insert("s4", "a", 2);
        let r1 = Ranking::from_scored("s1", vec![("a".into(), 1.0)]);
        let r2 = Ranking::from_scored("s2", vec![("b".into(), 1.0)]);
        let r3 = Ranking::from_scored("s3", vec![("a".into(), 1.0)]);
        let r9 = Ranking::from_scored("s9", vec![("a".into(), 1.0)]);
        let rep = evaluate_run(&[r1.clone(), r2.clone(), r3, r9], &q, EvalOptions::default());
        assert_eq!(rep.mean_ndcg_at_10, Some(0.5));
        assert_eq!(rep.excluded, vec!["s3"]);
        assert_eq!(rep.unknown, vec!["s9"]);
        assert_eq!(rep.missing, vec!["s4"]);
        assert_eq!(rep.evaluated(), 2);
        assert_eq!(rep.to_csv(), "session_id,ndcg10,mrr\ns1,1.000000,1.000000\ns2,0.000000,0.000000\n");

        let zero = evaluate_run(&[r1, r2], &q, EvalOptions { missing_as_zero: true });
        assert!((zero.mean_ndcg_at_10.unwrap() - 1.0 / 3.0).abs() < 1e-15);

        let empty = evaluate_run(&[], &Qrels::new(), EvalOptions::default());
        assert!(empty.results.is_empty());
        assert_eq!(empty.mean_ndcg_at_10, None);
    }

    fn session(id: &str, len: usize) -> Session {
        use crate::sessionlog::{Interaction, Query};
        let q = |t: &str| Query {
            text: t.into(),
            terms: vec![t.into()],
        };
        Session {
            session_id: id.into(),
            topic_id: None,
            history: (1..len)
                .map(|_| Interaction {
                    query: q("a"),
                    serp: vec![],
                })
                .collect(),
            current_query: q("a"),
        }
    }

    #[test]
    fn length_groups() {
        let res = |id: &str, v: f64| EvalResult {
            session_id: id.into(),
            ndcg_at_10: v,
            mrr: v,
        };
        let sessions = vec![session("a", 2), session("b", 2), session("c", 5)];
        let g = by_session_length(&[res("a", 1.0), res("b", 0.0), res("c", 0.5)], &sessions).unwrap();
        assert_eq!(g.keys().copied().collect::<Vec<_>>(), vec![2, 5]);
        assert_eq!((g[&2].count, g[&2].mean_ndcg_at_10), (2, 0.5));
        assert_eq!((g[&5].count, g[&5].mean_ndcg_at_10), (1, 0.5));
        let one = by_session_length(&[res("c", 0.25)], &sessions).unwrap();
        assert_eq!(one[&5].mean_ndcg_at_10, 0.25);
        assert!(by_session_length(&[], &sessions).unwrap().is_empty());
        assert!(by_session_length(&[res("zz", 0.1)], &sessions).is_err());
    }

    #[test]
    fn box_stats_examples() {
        let z = box_stats(&[0.0; 4]).unwrap();
        assert_eq!((z.q1, z.median, z.q3, z.mean), (0.0, 0.0, 0.0, 0.0));
        assert!(z.outliers.is_empty());
        let b = box_stats(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        assert_eq!((b.q1, b.median, b.q3), (2.0, 3.0, 4.0));
        assert_eq!(b.outliers, vec![100.0]);
        assert_eq!((b.whisker_low, b.whisker_high), (1.0, 4.0));
        assert_eq!(b.mean, 22.0);
        let s = box_stats(&[0.7]).unwrap();
        assert_eq!((s.q1, s.median, s.q3, s.mean), (0.7, 0.7, 0.7, 0.7));
        assert!(box_stats(&[]).is_err());
        let even = box_stats(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((even.q1, even.median, even.q3), (1.75, 2.5, 3.25));
    }
}
