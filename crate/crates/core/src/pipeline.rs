//! Per-session pipeline: first pass, then the method's re-ranking.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{ndcg_at_k, NDCG_K};
use crate::oracles::{ground_truth_rank, ideal_weights, GridConfig, GridOutcome};
use crate::querymodels::{session_model, tf_session_model, AnchorTexts, Method, MethodParams, TfScope};
use crate::ranker::{first_pass, rerank, CandidateSet, Ranking, RetrievalConfig};
use crate::sessionlog::{Judgments, Session};
use crate::textindex::Index;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default)]
    pub retrieval: RetrievalConfig,
    #[serde(default)]
    pub params: MethodParams,
    #[serde(default)]
    pub grid: GridConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.retrieval.smoothing.validate()?;
        if self.retrieval.first_pass_n == 0 {
            return Err(Error::InvalidConfig("first-pass N must be positive".into()));
        }
        self.params.validate()?;
        self.grid.lattice().map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionOutcome {
    pub ranking: Ranking,
    pub grid: Option<GridReport>,
}

/// Grid search outcome plus TF(all) and ground-truth NDCG@10 on the same
/// (capped) candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub outcome: GridOutcome,
    pub tf_all_ndcg: Option<f64>,
    pub ground_truth_ndcg: Option<f64>,
}

fn need_judgments<'j>(session: &Session, j: Option<&'j Judgments>) -> Result<&'j Judgments> {
    j.ok_or_else(|| Error::NotEvaluable(format!("{} (no judgments)", session.session_id)))
}

/// Grid search on the session's first-pass candidates, returning the ranking
/// by the best weights when the search ran.
pub fn grid_session(
    index: &Index,
    session: &Session,
    cfg: &PipelineConfig,
    judgments: &Judgments,
) -> Result<(Option<Ranking>, GridReport)> {
    let all = first_pass(index, session, &cfg.retrieval)?;
    let cands = match cfg.grid.max_candidates {
        Some(n) => all.truncated(n),
        None => all,
    };
    let smoothing = cfg.retrieval.smoothing;
    let tf = tf_session_model(session, TfScope::AllQueries)?;
    let tf_ranking = rerank(index, &cands, &tf, &cfg.retrieval)?;
    let gt = ground_truth_rank(&cands, judgments);
    let outcome = ideal_weights(index, session, &cands, judgments, &cfg.grid, smoothing, &[tf])?;
    let ranking = match &outcome {
        GridOutcome::Searched(r) => Some(rank_by_weights(index, &cands, &r.best_weights, &cfg.retrieval)?),
        GridOutcome::Skipped { .. } => None,
    };
    Ok((
        ranking,
        GridReport {
            outcome,
            tf_all_ndcg: ndcg_at_k(&tf_ranking, judgments, NDCG_K),
            ground_truth_ndcg: ndcg_at_k(&gt, judgments, NDCG_K),
        },
    ))
}

/// `rerank`, except that an empty model (the all-zero grid point) gives every
/// indexed candidate score 0.
fn rank_by_weights(
    index: &Index,
    cands: &CandidateSet,
    qm: &crate::lmscore::QueryModel,
    cfg: &RetrievalConfig,
) -> Result<Ranking> {
    if !qm.is_empty() {
        return rerank(index, cands, qm, cfg);
    }
    Ok(Ranking::from_scored(
        cands.session_id.clone(),
        cands
            .docnos
            .iter()
            .map(|d| {
                let s = if index.doc_id(d).is_some() { 0.0 } else { f64::NEG_INFINITY };
                (d.clone(), s)
            })
            .collect(),
    ))
}

/// Ranks the session's current query with `method`. Oracle and grid methods
/// need the session's judgments.
pub fn rank_session(
    index: &Index,
    session: &Session,
    method: Method,
    cfg: &PipelineConfig,
    anchors: Option<&AnchorTexts>,
    judgments: Option<&Judgments>,
) -> Result<SessionOutcome> {
    match method {
        Method::Grid => {
            let j = need_judgments(session, judgments)?;
            let (ranking, report) = grid_session(index, session, cfg, j)?;
            match (ranking, &report.outcome) {
                (Some(ranking), _) => Ok(SessionOutcome {
                    ranking,
                    grid: Some(report),
                }),
                (None, GridOutcome::Skipped { reason, .. }) => Err(Error::GridSkipped {
                    session: session.session_id.clone(),
                    reason: serde_json::to_string(reason)?,
                }),
                (None, GridOutcome::Searched(_)) => unreachable!("searched grids rank"),
            }
        }
        Method::Oracle => {
            let j = need_judgments(session, judgments)?;
            let cands = first_pass(index, session, &cfg.retrieval)?;
            Ok(SessionOutcome {
                ranking: ground_truth_rank(&cands, j),
                grid: None,
            })
        }
        _ => {
            let cands = first_pass(index, session, &cfg.retrieval)?;
            let qm = session_model(method, index, session, &cfg.params, anchors)?;
            Ok(SessionOutcome {
                ranking: rerank(index, &cands, &qm, &cfg.retrieval)?,
                grid: None,
            })
        }
    }
}
