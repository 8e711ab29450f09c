use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("basis dimension for {sites} sites and {particles} particles overflows u64")]
    DimensionOverflow { sites: usize, particles: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("site {site} is out of range for a chain of {sites} sites")]
    SiteOutOfRange { site: usize, sites: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("basis ({basis_sites} sites, {basis_particles} particles) does not match parameters ({sites} sites, {particles} particles)")]
    BasisMismatch {
        basis_sites: usize,
        basis_particles: usize,
        sites: usize,
        particles: usize,
    },

    #[error("matrix dimension {dim} exceeds the dense eigensolver cap of {cap}")]
    DenseCapExceeded { dim: usize, cap: usize },

    #[error(
        "eigensolver did not converge for eigenvalue {index} after {iterations} iterations (residual {residual:e})"
    )]
    NoConvergence {
        index: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("root solve did not converge after {iterations} iterations (residual {residual:e})")]
    RootNotConverged { iterations: usize, residual: f64 },

    #[error("target {target} is outside the attainable range ({low}, {high})")]
    TargetOutOfRange { target: f64, low: f64, high: f64 },

    #[error("no eigenvalue within [{low}, {high}]; try a larger energy window")]
    EmptyWindow { low: f64, high: f64 },

    #[error("non-positive purity {0:e}; entropy undefined")]
    NonPositivePurity(f64),

    #[error("subsystems overlap at site {0}")]
    OverlappingSubsystems(usize),

    #[error("density matrices cover different blocks or sites")]
    BlockMismatch,

    #[error("invariant violated: {0}")]
    Invariant(String),
}
