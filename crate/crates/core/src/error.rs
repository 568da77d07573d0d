use thiserror::Error;

/// Errors raised by the lattice, bath and transport computations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// One or more parameters are outside their validity range. Every
    /// offending key is listed.
    #[error("invalid parameters: {}", .0.join("; "))]
    InvalidParams(Vec<String>),

    #[error("negative temperature {0}")]
    NegativeTemperature(f64),

    /// The continuum position-type integrals diverge at q = 0 when ω₀ = 0.
    #[error("zero-mode divergence: {0}")]
    ZeroModeDivergence(&'static str),

    #[error("momentum-type diffusion is only defined for displacement 0, got {0}")]
    MomentumDisplacement(usize),

    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e} after {intervals} panels")]
    Quadrature {
        estimate: f64,
        error: f64,
        intervals: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// The drift matrix has a mode whose damping is not strictly positive.
    #[error("drift matrix is not Hurwitz: mode q = {q} has damping {damping}")]
    NotHurwitz { q: f64, damping: f64 },

    #[error("covariance lost positive semidefiniteness at t = {time}: min eigenvalue {min_eig:e}, max eigenvalue {max_eig:e}")]
    NotPsd { time: f64, min_eig: f64, max_eig: f64 },

    #[error("time step {dt} violates the stability bound {bound}")]
    Cfl { dt: f64, bound: f64 },

    #[error("sampling too coarse for finite differences: {0}")]
    CoarseSampling(String),

    #[error("singular linear system in {0}")]
    Singular(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
