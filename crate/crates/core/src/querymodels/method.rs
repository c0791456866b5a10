use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::nugget::{nugget_model, AnchorTexts, NuggetParams, NuggetVariant};
use super::qcm::{qcm_session_model, QcmConfig};
use super::tf::{tf_session_model, TfScope};
use crate::error::{Error, Result};
use crate::lmscore::QueryModel;
use crate::sessionlog::Session;
use crate::textindex::Index;

/// A re-ranking method. `Oracle` and `Grid` rank from relevance judgments and
/// have no query model of their own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    TfFirst,
    TfLast,
    TfAll,
    NuggetRl2,
    NuggetRl3,
    NuggetRl4,
    Qcm,
    Oracle,
    Grid,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::TfFirst,
        Method::TfLast,
        Method::TfAll,
        Method::NuggetRl2,
        Method::NuggetRl3,
        Method::NuggetRl4,
        Method::Qcm,
        Method::Oracle,
        Method::Grid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::TfFirst => "tf_first",
            Method::TfLast => "tf_last",
            Method::TfAll => "tf_all",
            Method::NuggetRl2 => "nugget_rl2",
            Method::NuggetRl3 => "nugget_rl3",
            Method::NuggetRl4 => "nugget_rl4",
            Method::Qcm => "qcm",
            Method::Oracle => "oracle",
            Method::Grid => "grid",
        }
    }

    pub fn has_query_model(self) -> bool {
        !matches!(self, Method::Oracle | Method::Grid)
    }

    fn nugget_variant(self) -> Option<NuggetVariant> {
        match self {
            Method::NuggetRl2 => Some(NuggetVariant::Rl2),
            Method::NuggetRl3 => Some(NuggetVariant::Rl3),
            Method::NuggetRl4 => Some(NuggetVariant::Rl4),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method {s:?}")))
    }
}

/// Parameters shared by the query-model methods.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MethodParams {
    #[serde(default)]
    pub nugget: NuggetParams,
    #[serde(default)]
    pub qcm: QcmConfig,
}

impl MethodParams {
    pub fn validate(&self) -> Result<()> {
        self.nugget.validate()?;
        self.qcm.params.validate()
    }
}

/// Builds θ^s for `session` under `method`.
pub fn session_model(
    method: Method,
    index: &Index,
    session: &Session,
    params: &MethodParams,
    anchors: Option<&AnchorTexts>,
) -> Result<QueryModel> {
    match method {
        Method::TfFirst => tf_session_model(session, TfScope::FirstQuery),
        Method::TfLast => tf_session_model(session, TfScope::LastQuery),
        Method::TfAll => tf_session_model(session, TfScope::AllQueries),
        Method::NuggetRl2 | Method::NuggetRl3 | Method::NuggetRl4 => {
            let p = NuggetParams {
                variant: method.nugget_variant().expect("nugget method"),
                ..params.nugget
            };
            nugget_model(index, session, &p, anchors)
        }
        Method::Qcm => qcm_session_model(index, session, &params.qcm),
        Method::Oracle | Method::Grid => Err(Error::InvalidConfig(format!(
            "method {method} has no query model"
        ))),
    }
}
