use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shift {shift} leaves the translation window (|c| must be < {limit})")]
    OutOfWindow { shift: f64, limit: f64 },

    #[error("pulse extinguished: max u = {max_u:.3e} fell below {threshold:.3e}")]
    Extinction { max_u: f64, threshold: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular matrix (pivot {pivot} of {n}, condition estimate {condition:.3e})")]
    Singular {
        pivot: usize,
        n: usize,
        condition: f64,
    },

    #[error("eigen-iteration failed: {0}")]
    Eigen(String),

    #[error("zero mode misaligned with the profile derivative (cosine {cosine:.6})")]
    ZeroModeMisaligned { cosine: f64 },

    #[error("contour radius {radius:.3e} too close to the spectrum (condition {condition:.3e})")]
    ContourTooClose { radius: f64, condition: f64 },

    #[error("simulation blew up at t = {t:.4}")]
    BlowUp { t: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) => 2,
            Error::Io(_) => 4,
            _ => 3,
        }
    }
}
