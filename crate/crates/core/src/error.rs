use thiserror::Error;

use crate::numeric::QuadFailure;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state spec at `{token}`: {reason}")]
    StateParse { token: String, reason: String },

    #[error("state is not normalizable: all amplitudes vanish")]
    Unnormalizable,

    #[error("not a valid density matrix: {0}")]
    NotPhysical(String),

    #[error("moment order {k} requires Fock dimension > {k}, got {dim}")]
    OrderOutOfRange { k: usize, dim: usize },

    #[error("{context}: {failure}")]
    Quadrature {
        context: &'static str,
        failure: QuadFailure,
    },

    #[error("{what} did not converge within {terms} terms (last term {last:e})")]
    SeriesNotConverged {
        what: &'static str,
        terms: usize,
        last: f64,
    },

    #[error("C_l coefficient mismatch at l={l}: alternating sum {series:e} vs integral {integral:e}")]
    CoefficientMismatch { l: usize, series: f64, integral: f64 },

    #[error("s=-1 kernel diverges at r=0 (K_k(r;-1) ~ r^-k)")]
    KernelDivergent,

    #[error("s-parametrized function does not converge for s={s} within the truncation (edge contribution {edge:e})")]
    WsNotConverged { s: f64, edge: f64 },

    #[error("phase-kernel tail |K_kmax| = {achieved:e} at r={r} exceeds {target:e} with k_max={k_max}")]
    TailUnmet {
        r: f64,
        k_max: usize,
        achieved: f64,
        target: f64,
    },

    #[error("rejection envelope violated: acceptance ratio {ratio}")]
    EnvelopeViolation { ratio: f64 },

    #[error("event batch is empty")]
    EmptyBatch,

    #[error("kernel undefined: event at r=0 with r0=0")]
    EventAtOrigin,

    #[error("all {n} events fall inside the regularization radius")]
    AllExcluded { n: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed event file at byte {offset}: {reason}")]
    Format { offset: usize, reason: String },

    #[error("unsupported event file version: {0}")]
    Version(String),

    #[error("checksum mismatch: file says {expected:08x}, payload hashes to {actual:08x}")]
    Checksum { expected: u32, actual: u32 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn quad(context: &'static str) -> impl FnOnce(QuadFailure) -> Error {
        move |failure| Error::Quadrature { context, failure }
    }
}
