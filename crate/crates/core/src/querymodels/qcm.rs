//! Query change model: per-interaction term weights from the edit between
//! consecutive queries and the previous result page.
//!
//! For interaction i ≥ 2, with P = P(t | reference docs of interaction i−1):
//!
//! | case                               | weight        |
//! |------------------------------------|---------------|
//! | theme (in q_{i−1} and q_i)         | 1 + α(1 − P)  |
//! | added, present in reference doc    | 1 − βP        |
//! | added, absent from reference doc   | 1 + ε·idf(t)  |
//! | removed (in q_{i−1} only)          | −δP           |
//!
//! Interaction 1 has no previous page and falls back to plain TF.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::tf::{aggregate, tf_model, AggregationScheme};
use crate::error::{Error, Result};
use crate::lmscore::{idf, sat_prob, term_in_reference, LexEntity, PriorDocSource, QueryModel};
use crate::sessionlog::{Query, Session};
use crate::textindex::{Index, Term};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QcmParams {
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub delta: f64,
}

impl Default for QcmParams {
    fn default() -> Self {
        QcmParams {
            alpha: 2.2,
            beta: 1.8,
            epsilon: 0.07,
            delta: 0.4,
        }
    }
}

impl QcmParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("epsilon", self.epsilon),
            ("delta", self.delta),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "QCM {name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QcmConfig {
    #[serde(default)]
    pub params: QcmParams,
    #[serde(default)]
    pub prior_source: PriorDocSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QcmDecomposition {
    pub theme: BTreeSet<Term>,
    pub added: BTreeSet<Term>,
    pub removed: BTreeSet<Term>,
}

pub fn qcm_decompose(prev: &Query, cur: &Query) -> QcmDecomposition {
    let p: BTreeSet<Term> = prev.terms.iter().cloned().collect();
    let c: BTreeSet<Term> = cur.terms.iter().cloned().collect();
    QcmDecomposition {
        theme: c.intersection(&p).cloned().collect(),
        added: c.difference(&p).cloned().collect(),
        removed: p.difference(&c).cloned().collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QcmCase {
    Theme,
    AddedPresent,
    AddedAbsent,
    Removed,
}

/// Weight of one term under its QCM case.
pub fn qcm_weight(case: QcmCase, prob: f64, idf: f64, p: &QcmParams) -> f64 {
    match case {
        QcmCase::Theme => 1.0 + p.alpha * (1.0 - prob),
        QcmCase::AddedPresent => 1.0 - p.beta * prob,
        QcmCase::AddedAbsent => 1.0 + p.epsilon * idf,
        QcmCase::Removed => -p.delta * prob,
    }
}

/// θ^{s_i} for 1 ≤ i ≤ n + 1.
pub fn qcm_interaction_model(
    index: &Index,
    session: &Session,
    i: usize,
    cfg: &QcmConfig,
) -> Result<QueryModel> {
    cfg.params.validate()?;
    let cur = session.query(i).ok_or_else(|| Error::InteractionOutOfRange {
        session: session.session_id.clone(),
        index: i,
        len: session.history.len(),
    })?;
    if i == 1 {
        return tf_model(cur);
    }
    let prev_idx = i - 1;
    if session.history[prev_idx - 1].serp.is_empty() {
        return Err(Error::MissingSerp {
            session: session.session_id.clone(),
            interaction: prev_idx,
        });
    }
    let prev = session.query(prev_idx).expect("prev < i");
    let dec = qcm_decompose(prev, cur);
    let src = cfg.prior_source;
    let mut qm = QueryModel::new();
    for t in &dec.theme {
        let p = sat_prob(index, session, prev_idx, t, src)?;
        qm.set(LexEntity::Term(t.clone()), qcm_weight(QcmCase::Theme, p, 0.0, &cfg.params));
    }
    for t in &dec.added {
        let w = if term_in_reference(index, session, prev_idx, t, src)? {
            let p = sat_prob(index, session, prev_idx, t, src)?;
            qcm_weight(QcmCase::AddedPresent, p, 0.0, &cfg.params)
        } else {
            qcm_weight(QcmCase::AddedAbsent, 0.0, idf(index, t), &cfg.params)
        };
        qm.set(LexEntity::Term(t.clone()), w);
    }
    for t in &dec.removed {
        let p = sat_prob(index, session, prev_idx, t, src)?;
        qm.set(LexEntity::Term(t.clone()), qcm_weight(QcmCase::Removed, p, 0.0, &cfg.params));
    }
    Ok(qm)
}

/// Uniform aggregate of the interaction models for i = 1 … n + 1.
///
/// An empty first query contributes an empty model instead of failing.
pub fn qcm_session_model(index: &Index, session: &Session, cfg: &QcmConfig) -> Result<QueryModel> {
    let models = (1..=session.len())
        .map(|i| match qcm_interaction_model(index, session, i, cfg) {
            Err(Error::EmptyQuery { .. }) if i == 1 => Ok(QueryModel::new()),
            other => other,
        })
        .collect::<Result<Vec<_>>>()?;
    aggregate(&models, AggregationScheme::Uniform)
}
