use thiserror::Error;

use crate::decoy_lp::InfeasibleLp;
use crate::simplex::LpError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of a scalar function.
    #[error("{function}: argument {value} outside domain ({expected})")]
    Domain {
        function: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid protocol parameters: {0}")]
    InvalidParameters(String),

    #[error("invalid measurement set: {0}")]
    InvalidMeasurements(String),

    #[error("invalid security analysis settings: {0}")]
    InvalidAnalysis(String),

    #[error("invalid system model: {0}")]
    InvalidModel(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Infeasible(#[from] Box<InfeasibleLp>),

    #[error("linear program solver: {0}")]
    Solver(#[from] LpError),
}

impl Error {
    pub(crate) fn domain(function: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Domain {
            function,
            value,
            expected,
        }
    }
}
