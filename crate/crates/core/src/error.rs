//! Error type shared by every module.

use thiserror::Error;

/// Failures raised by the numerical and exact routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("integer overflow in exact arithmetic")]
    Overflow,
    #[error("gcd(0, 0) is undefined")]
    GcdOfZeros,
    #[error("denominator vanishes (|j| = {0:e})")]
    DenominatorVanishes(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("solver failed: {0}")]
    SolverFailure(String),
    #[error("c = {0} is a pole of the hypergeometric series")]
    PoleAtC(String),
    #[error("no convergent evaluation route for 2F1 at z = {0}")]
    NonConvergence(String),
    #[error("Gauss sum diverges: Re(c - a - b) = {0} <= 0")]
    DivergesAtOne(f64),
    #[error("point lies on the boundary pairing singularity (|rho(Z,W)| = {0:e})")]
    BoundaryCollision(f64),
    #[error("u = {0:e} <= 0: radial kernel is singular")]
    SingularAtZero(f64),
    #[error("coincident points (u = {0:e})")]
    CoincidentPoints(f64),
    #[error("spectral parameter hits a pole of the kernel prefactor: {0}")]
    PoleAtPrefactor(String),
    #[error("stencil leaves the domain at {0}")]
    StencilOutOfDomain(String),
    #[error("integrand decays too slowly: tail estimate {0:e}")]
    SlowDecay(f64),
    #[error("non-finite integrand sample")]
    NonFinite,
    #[error("singular refinement did not settle: last increment {0:e}")]
    SingularityUnresolved(f64),
    #[error("Re(s) = {0} lies outside the convergence region")]
    ConvergenceRegion(f64),
    #[error("orbit collision: sigma - 1 = {0:e}")]
    OrbitCollision(f64),
    #[error("pair (alpha, beta) is not in Gamma cap N")]
    NotInGammaN,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown expression: {0}")]
    UnknownExpression(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
