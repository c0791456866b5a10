use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lmscore::{LexEntity, QueryModel};
use crate::sessionlog::{Query, Session};

/// How per-interaction models θ^{s_i} combine into the session model θ^s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationScheme {
    /// θ^s = Σ_i θ^{s_i}
    #[default]
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TfScope {
    FirstQuery,
    LastQuery,
    AllQueries,
}

/// Term weights equal to in-query frequency.
pub fn tf_model(query: &Query) -> Result<QueryModel> {
    if query.is_empty() {
        return Err(Error::EmptyQuery {
            context: (!query.text.is_empty()).then(|| query.text.clone()),
        });
    }
    let mut qm = QueryModel::new();
    for t in &query.terms {
        qm.add(LexEntity::Term(t.clone()), 1.0);
    }
    Ok(qm)
}

/// Entity-wise combination of interaction models; zero sums are dropped.
pub fn aggregate(models: &[QueryModel], scheme: AggregationScheme) -> Result<QueryModel> {
    if models.is_empty() {
        return Err(Error::EmptyModelList);
    }
    match scheme {
        AggregationScheme::Uniform => {
            let mut out = QueryModel::new();
            for m in models {
                for (e, w) in m.iter() {
                    out.add(e.clone(), w);
                }
            }
            Ok(out)
        }
    }
}

/// TF over the first, the last (current) or all queries of a session.
/// Empty history queries contribute nothing to `AllQueries`.
pub fn tf_session_model(session: &Session, scope: TfScope) -> Result<QueryModel> {
    match scope {
        TfScope::FirstQuery => tf_model(session.query(1).expect("sessions have a query")),
        TfScope::LastQuery => tf_model(&session.current_query),
        TfScope::AllQueries => {
            let models = session
                .queries()
                .filter(|q| !q.is_empty())
                .map(tf_model)
                .collect::<Result<Vec<_>>>()?;
            aggregate(&models, AggregationScheme::Uniform)
        }
    }
}
