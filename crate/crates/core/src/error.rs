use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The chain violates ordering or parity rules.
    #[error("invalid dressing chain: {0}")]
    InvalidChain(String),

    /// Wronskian determinant vanished relative to its row norms.
    #[error("degenerate Wronskian at x = {x}: |det| / norm = {ratio:e}")]
    DegenerateWronskian { x: f64, ratio: f64 },

    #[error("quadrature failure: error estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    QuadratureFailure { estimate: f64, tolerance: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    /// Solution growth exceeded the a priori bound of the evolution.
    #[error("stability error at tau = {tau}: max |rho| = {observed:e} exceeds bound {bound:e}")]
    Stability { tau: f64, observed: f64, bound: f64 },

    #[error("convergence error: {0}")]
    Convergence(String),
}

impl Error {
    /// True for failures of a numerical method (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::QuadratureFailure { .. }
                | Error::Convergence(_)
                | Error::Stability { .. }
                | Error::DegenerateWronskian { .. }
        )
    }
}
