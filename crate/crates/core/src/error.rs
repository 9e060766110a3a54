use thiserror::Error;

/// Errors raised anywhere in the core crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("chi is not differentiable at x = {x}")]
    NotDifferentiable { x: f64 },

    #[error("degenerate parameters (d_minus = d_plus) refused by {0}")]
    Degenerate(&'static str),

    #[error("complex roots: {0}")]
    ComplexRoots(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("parameters outside regime: {0}")]
    Regime(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("CFL violation: dt = {dt} exceeds the stable bound {bound}")]
    Cfl { dt: f64, bound: f64 },

    #[error("non-finite value after step {step}")]
    Blowup { step: usize },

    #[error("insufficient samples: need {needed}, have {have}")]
    InsufficientSamples { needed: usize, have: usize },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("root not bracketed: {0}")]
    NotBracketed(String),

    #[error("domain too small: {0}")]
    DomainTooSmall(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
