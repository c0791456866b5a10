//! Comparison reports over several runs: the results table, box statistics
//! per method, per-length means and progressing-session deltas.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::metrics::{box_stats, by_session_length, evaluate_run, has_positive, progressing_session, BoxStats, EvalOptions};
use crate::pipeline::PipelineConfig;
use crate::querymodels::{AnchorTexts, Method};
use crate::ranker::Ranking;
use crate::sessionlog::{HistoryMode, Qrels, Session};
use crate::textindex::Index;

pub const TABLE2_FILE: &str = "table2.csv";
pub const FIG2_FILE: &str = "fig2_box.json";
pub const FIG3_FILE: &str = "fig3_by_length.csv";
pub const FIG4_FILE: &str = "fig4_progressing.csv";
pub const REPORT_FILE: &str = "report.json";

/// Published NDCG@10 / MRR per method and track edition, for context only.
/// Edition, NDCG@10, MRR.
pub type PublishedCell = (&'static str, f64, f64);

pub const PUBLISHED_TABLE2: &[(&str, [PublishedCell; 4])] = &[
    ("oracle", [("2011", 0.777, 0.868), ("2012", 0.695, 0.865), ("2013", 0.517, 0.920), ("2014", 0.410, 0.800)]),
    ("tf_first", [("2011", 0.371, 0.568), ("2012", 0.302, 0.523), ("2013", 0.121, 0.379), ("2014", 0.120, 0.336)]),
    ("tf_last", [("2011", 0.358, 0.598), ("2012", 0.316, 0.586), ("2013", 0.133, 0.358), ("2014", 0.156, 0.458)]),
    ("tf_all", [("2011", 0.448, 0.685), ("2012", 0.348, 0.604), ("2013", 0.162, 0.477), ("2014", 0.174, 0.478)]),
    ("nugget_rl2", [("2011", 0.437, 0.677), ("2012", 0.352, 0.609), ("2013", 0.163, 0.488), ("2014", 0.173, 0.476)]),
    ("nugget_rl3", [("2011", 0.442, 0.678), ("2012", 0.360, 0.619), ("2013", 0.162, 0.488), ("2014", 0.172, 0.477)]),
    ("nugget_rl4", [("2011", 0.437, 0.677), ("2012", 0.352, 0.609), ("2013", 0.163, 0.488), ("2014", 0.173, 0.476)]),
    ("qcm", [("2011", 0.440, 0.661), ("2012", 0.342, 0.575), ("2013", 0.160, 0.484), ("2014", 0.162, 0.450)]),
];

/// Published mean NDCG@10 for TF(all), ideal weighting and the ground-truth
/// oracle over sessions with at most 7 unique terms.
pub const PUBLISHED_TABLE4: &[(&str, f64, f64, f64)] = &[
    ("2011", 0.391, 0.589, 0.716),
    ("2012", 0.333, 0.528, 0.682),
    ("2013", 0.179, 0.361, 0.593),
    ("2014", 0.183, 0.296, 0.453),
];

#[derive(Debug, Clone)]
pub struct RunInput {
    pub label: String,
    pub edition: String,
    pub rankings: Vec<Ranking>,
}

/// Inputs for the progressing-session breakdown, which re-runs the pipeline.
pub struct Progressing<'a> {
    pub index: &'a Index,
    pub methods: &'a [Method],
    pub pipeline: &'a PipelineConfig,
    pub anchors: Option<&'a AnchorTexts>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub label: String,
    pub edition: String,
    pub sessions: usize,
    pub evaluated: usize,
    pub mean_ndcg_at_10: Option<f64>,
    pub mean_mrr: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportSummary {
    pub runs: Vec<RunSummary>,
    /// Sessions present in some runs but not all.
    pub mismatched_sessions: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
struct BoxEntry<'a> {
    method: &'a str,
    edition: &'a str,
    stats: Option<BoxStats>,
}

pub struct ReportOutput {
    pub summary: ReportSummary,
    pub files: Vec<(&'static str, String)>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"))
}

fn mode_name(m: HistoryMode) -> &'static str {
    match m {
        HistoryMode::FullHistory => "full_history",
        HistoryMode::PreviousQueryOnly => "previous_query_only",
    }
}

pub fn build_report(
    runs: &[RunInput],
    qrels: &Qrels,
    sessions: &[Session],
    reference: bool,
    progressing: Option<&Progressing>,
) -> Result<ReportOutput> {
    let evals: Vec<_> = runs
        .iter()
        .map(|r| evaluate_run(&r.rankings, qrels, EvalOptions::default()))
        .collect();

    let sets: Vec<BTreeSet<&str>> = runs
        .iter()
        .map(|r| r.rankings.iter().map(|x| x.session_id.as_str()).collect())
        .collect();
    let union: BTreeSet<&str> = sets.iter().flatten().copied().collect();
    let mismatched_sessions: Vec<String> = union
        .iter()
        .filter(|s| sets.iter().any(|set| !set.contains(*s)))
        .map(|s| s.to_string())
        .collect();
    if !mismatched_sessions.is_empty() {
        warn!("{} sessions are missing from some runs", mismatched_sessions.len());
    }

    let mut table2 = String::from("source,method,edition,ndcg10,mrr,sessions\n");
    for (r, e) in runs.iter().zip(&evals) {
        let _ = writeln!(
            table2,
            "local,{},{},{},{},{}",
            r.label,
            r.edition,
            fmt_opt(e.mean_ndcg_at_10),
            fmt_opt(e.mean_mrr),
            e.evaluated()
        );
    }
    if reference {
        for (method, cells) in PUBLISHED_TABLE2 {
            for (edition, ndcg, mrr) in cells {
                let _ = writeln!(table2, "published,{method},{edition},{ndcg:.3},{mrr:.3},");
            }
        }
    }

    let boxes: Vec<BoxEntry> = runs
        .iter()
        .zip(&evals)
        .map(|(r, e)| {
            let values: Vec<f64> = e.results.iter().map(|x| x.ndcg_at_10).collect();
            BoxEntry {
                method: &r.label,
                edition: &r.edition,
                stats: box_stats(&values).ok(),
            }
        })
        .collect();

    let mut fig3 = String::from("method,edition,length,count,mean_ndcg10\n");
    for (r, e) in runs.iter().zip(&evals) {
        for (len, g) in by_session_length(&e.results, sessions)? {
            let _ = writeln!(
                fig3,
                "{},{},{len},{},{:.6}",
                r.label, r.edition, g.count, g.mean_ndcg_at_10
            );
        }
    }

    let mut files = vec![
        (TABLE2_FILE, table2),
        (FIG2_FILE, serde_json::to_string_pretty(&boxes)? + "\n"),
        (FIG3_FILE, fig3),
    ];
    if let Some(p) = progressing {
        files.push((FIG4_FILE, fig4(p, qrels, sessions)?));
    }
    let summary = ReportSummary {
        runs: runs
            .iter()
            .zip(&evals)
            .map(|(r, e)| RunSummary {
                label: r.label.clone(),
                edition: r.edition.clone(),
                sessions: r.rankings.len(),
                evaluated: e.evaluated(),
                mean_ndcg_at_10: e.mean_ndcg_at_10,
                mean_mrr: e.mean_mrr,
            })
            .collect(),
        mismatched_sessions,
    };
    files.push((REPORT_FILE, serde_json::to_string_pretty(&summary)? + "\n"));
    Ok(ReportOutput { summary, files })
}

/// Per-session NDCG@10 after every interaction and its difference from
/// TF(last query) at the same step, for both history modes. Rows with
/// session `ALL` average over the sessions that reach that step.
fn fig4(p: &Progressing, qrels: &Qrels, sessions: &[Session]) -> Result<String> {
    let evaluable: Vec<&Session> = sessions
        .iter()
        .filter(|s| qrels.for_session(&s.session_id).is_some_and(has_positive))
        .collect();
    let modes = [HistoryMode::FullHistory, HistoryMode::PreviousQueryOnly];
    let mut out = String::from("method,history_mode,session_id,length,step,ndcg10,delta_vs_tf_last\n");
    let curves = |method: Method, mode: HistoryMode| -> Result<Vec<Option<Vec<f64>>>> {
        evaluable
            .par_iter()
            .map(|s| {
                let j = qrels.for_session(&s.session_id).expect("filtered");
                match progressing_session(p.index, s, method, j, mode, p.pipeline, p.anchors) {
                    Ok(v) => Ok(Some(v)),
                    Err(e) if !e.is_input_error() => {
                        warn!("session {} ({method}, {}): {e}", s.session_id, mode_name(mode));
                        Ok(None)
                    }
                    Err(e) => Err(e),
                }
            })
            .collect()
    };
    for mode in modes {
        let base = curves(Method::TfLast, mode)?;
        for &method in p.methods {
            let vals = if method == Method::TfLast { base.clone() } else { curves(method, mode)? };
            let mut sums: Vec<(f64, f64, usize)> = Vec::new();
            for ((s, v), b) in evaluable.iter().zip(&vals).zip(&base) {
                let (Some(v), Some(b)) = (v, b) else { continue };
                for (step, (x, y)) in v.iter().zip(b).enumerate() {
                    let d = x - y;
                    let _ = writeln!(
                        out,
                        "{method},{},{},{},{},{x:.6},{d:.6}",
                        mode_name(mode),
                        s.session_id,
                        s.len(),
                        step + 1
                    );
                    if sums.len() <= step {
                        sums.resize(step + 1, (0.0, 0.0, 0));
                    }
                    sums[step].0 += x;
                    sums[step].1 += d;
                    sums[step].2 += 1;
                }
            }
            for (step, (x, d, n)) in sums.iter().enumerate() {
                let n = *n as f64;
                let _ = writeln!(
                    out,
                    "{method},{},ALL,,{},{:.6},{:.6}",
                    mode_name(mode),
                    step + 1,
                    x / n,
                    d / n
                );
            }
        }
    }
    Ok(out)
}
