use thiserror::Error;

use crate::sdp::SdpStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("eigen-solver did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    EigenNonConvergence { sweeps: usize, residual: f64 },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("SDP solver finished with status {status:?} after {iterations} iterations")]
    Sdp { status: SdpStatus, iterations: usize },

    #[error("alternating optimization failed at iteration {iteration}: {source}")]
    AltOpt {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Divergence { epoch: usize, loss: f64 },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("solver failure for seed {seed}: {source}")]
    Realization {
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures raised by a numerical solver rather than by bad input.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::EigenNonConvergence { .. }
            | Error::NotPositiveDefinite(_)
            | Error::Sdp { .. }
            | Error::Divergence { .. } => true,
            Error::AltOpt { source, .. } | Error::Realization { source, .. } => {
                source.is_solver_failure()
            }
            _ => false,
        }
    }
}
