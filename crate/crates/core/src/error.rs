use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The synthesized drive exceeds the amplitude cap. `required_tau_ns` is
    /// the shortest duration at which the same path stays under the cap.
    #[error("peak amplitude {peak:.6} rad/ns exceeds cap {cap:.6} rad/ns; minimal duration is {required_tau_ns:.4} ns")]
    AmplitudeExceeded {
        peak: f64,
        cap: f64,
        required_tau_ns: f64,
    },

    #[error("control phase branch cannot be resolved at t = {t_ns} ns")]
    Singularity { t_ns: f64 },

    #[error("quadrature did not converge: estimated error {error_estimate:e}")]
    QuadratureNonconvergence { error_estimate: f64 },

    #[error("singular detuning: {0}")]
    SingularDetuning(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("root search failed: {message}; mismatch at bracket ends = ({low:e}, {high:e}) rad/ns")]
    SearchFailure { message: String, low: f64, high: f64 },

    /// Norm (or trace) drift beyond the accepted bound; try a smaller step.
    #[error("integration accuracy lost: drift {drift:e} with dt = {dt} ns (try a smaller dt)")]
    Accuracy { drift: f64, dt: f64 },

    #[error("density matrix lost positivity: minimum eigenvalue {min_eigenvalue:e} at t = {t_ns} ns")]
    Positivity { min_eigenvalue: f64, t_ns: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
