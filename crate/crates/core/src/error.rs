use thiserror::Error;

/// Errors produced anywhere in the link-analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument lies outside the domain of the operation.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// A scenario description is incomplete or violates an invariant.
    #[error("configuration error: {0}")]
    Config(String),

    /// A field failed validation; `field` names the offending key.
    #[error("invalid value for `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("slot {slot} is outside the horizon of {horizon} slots")]
    SlotRange { slot: usize, horizon: usize },

    /// The mean-SINR series produced an unusable value.
    #[error("series evaluation failed: {reason} (partial sums: F = {f_partial}, G = {g_partial})")]
    Series {
        reason: String,
        f_partial: f64,
        g_partial: f64,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        op,
        detail: detail.into(),
    }
}
