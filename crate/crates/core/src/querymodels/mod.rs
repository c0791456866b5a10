//! Session query models θ^s: TF, Nugget and the query change model (QCM).

mod method;
mod nugget;
mod qcm;
mod tf;

pub use method::{session_model, Method, MethodParams};
pub use nugget::{nugget_model, AcceptanceRule, AnchorTexts, NuggetParams, NuggetVariant};
pub use qcm::{
    qcm_decompose, qcm_interaction_model, qcm_session_model, qcm_weight, QcmCase, QcmConfig,
    QcmDecomposition, QcmParams,
};
pub use tf::{aggregate, tf_model, tf_session_model, AggregationScheme, TfScope};
