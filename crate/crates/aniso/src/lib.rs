//! Connectivity observables for confined 3D ad hoc networks whose nodes carry
//! randomly oriented anisotropic antennas.
//!
//! The library computes analytic connectivity quantities (connectivity mass,
//! mean degree, full-connectivity probability) for parametric antenna gain
//! patterns under Rayleigh-fading soft links, and validates them against a
//! seeded Monte Carlo random-graph simulator in bounded and periodic domains.
//! Boundary (corner) effects and multi-lobe radiation patterns placed via
//! Thomson-problem configurations are handled in [`boundary`].
//!
//! Modules:
//! - [`specfn`]: gamma functions and adaptive quadrature primitives
//! - [`gain`]: parametric gain patterns and the connectivity functional
//! - [`analytic`]: homogeneous connectivity mass and derived observables
//! - [`boundary`]: corner masses, orientation minimization, Thomson points
//! - [`mcsim`]: seeded Monte Carlo network simulator
//! - [`cli`]: command-line surface used by the `aniso` binary

pub mod analytic;
pub mod boundary;
pub mod cli;
pub mod gain;
pub mod mcsim;
pub mod par;
pub mod specfn;

/// Error type shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("quadrature did not converge after {subdivisions} subdivisions (error estimate {err_est:e})")]
    NonConvergence { subdivisions: usize, err_est: f64 },
    #[error("invalid parameter `{field}`: {message}")]
    InvalidParameter { field: &'static str, message: String },
    #[error("lobe overlap: {0}")]
    LobeOverlap(String),
    #[error("insufficient points: {0}")]
    InsufficientPoints(String),
    #[error("optimization did not converge: {0}")]
    OptimizationFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
