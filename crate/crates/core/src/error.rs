use thiserror::Error;

/// Errors raised by the beamforming library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A numerical routine failed to converge or met a singular system.
    #[error("numeric failure in {routine}: {detail}")]
    Numeric { routine: &'static str, detail: String },

    /// The SDP solver stopped without meeting its certificate.
    #[error(
        "sdp solver {status:?} after {iterations} iterations \
         (primal {primal_residual:.3e}, dual {dual_residual:.3e}, gap {gap:.3e})"
    )]
    SdpNotConverged {
        status: crate::sdp::SdpStatus,
        iterations: usize,
        primal_residual: f64,
        dual_residual: f64,
        gap: f64,
    },

    /// Wraps a failure inside the alternating loop with the outer iteration index.
    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
