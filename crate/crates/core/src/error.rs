use thiserror::Error;

/// Failures raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("wavenumber {k} collides with diffraction order beta = {beta} (Wood anomaly)")]
    WoodAnomaly { k: f64, beta: f64 },
    #[error("Green's function evaluated at a lattice point")]
    LatticePoint,
    #[error("spectral representation requires x2 != 0")]
    OnLatticeLine,
    #[error("frequency |omega| = {0:e} is below the subwavelength floor")]
    FrequencyFloor(f64),
    #[error("operator is ill-conditioned (estimated condition number {0:e})")]
    IllConditioned(f64),
    #[error("root finder did not converge after {iterations} iterations (last |step| = {step:e})")]
    NoConvergence { iterations: usize, step: f64 },
    #[error("root finder left the search window at omega = {re} + {im}i")]
    LeftWindow { re: f64, im: f64 },
    #[error("contour passes within {0:e} of a characteristic value")]
    ContourTooClose(f64),
    #[error("requested discretization is too large: {0}")]
    TooLarge(String),
    #[error("{0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
