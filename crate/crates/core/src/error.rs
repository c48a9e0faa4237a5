use thiserror::Error;

use crate::state_space::MassDistribution;

/// Errors raised anywhere in the crate.
///
/// Each variant maps to a distinct process exit code through [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("resource limit: {what} (limit {limit})")]
    ResourceLimit { what: String, limit: u128 },

    #[error("no collisions are possible for N = {0}; the transition table would be empty")]
    EmptyTable(u32),

    #[error("transition label {label} out of range 1..={max}")]
    Label { label: usize, max: usize },

    #[error("bin {bin} out of range 1..={max}")]
    Bin { bin: usize, max: usize },

    #[error("transition {label} (bins {i},{j}) is infeasible from state {state}")]
    InfeasibleTransition {
        label: usize,
        i: u32,
        j: u32,
        state: MassDistribution,
    },

    #[error("time step too large: total transition probability {total} > 1 at state {state}")]
    StepSize { total: f64, state: MassDistribution },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fixed-point {op}: {msg}")]
    FixedPoint { op: &'static str, msg: String },

    #[error("arcsine fit: {0}")]
    Fit(String),

    #[error("cost model: {0}")]
    Cost(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn fixed(op: &'static str, msg: impl Into<String>) -> Self {
        Error::FixedPoint {
            op,
            msg: msg.into(),
        }
    }

    /// Process exit code used by the command-line front-end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) => 2,
            Error::InvalidParameter(_) => 3,
            Error::ResourceLimit { .. } => 4,
            Error::EmptyTable(_)
            | Error::Label { .. }
            | Error::Bin { .. }
            | Error::InfeasibleTransition { .. } => 5,
            Error::StepSize { .. } => 6,
            Error::FixedPoint { .. } => 7,
            Error::Fit(_) => 8,
            Error::Cost(_) => 9,
            Error::Io(_) => 10,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
