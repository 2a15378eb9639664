use alloc::string::String;

/// Errors produced by the estimation library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {gap:e}")]
    NotSymmetric { i: usize, j: usize, gap: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid matrix data: {0}")]
    InvalidMatrix(String),

    #[error("eigenvalue {eigenvalue:e} lies outside the domain of the matrix function")]
    DomainError { eigenvalue: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eig:e})")]
    NotPositiveDefinite { min_eig: f64 },

    #[error("eigenvalue {eigenvalue:e} lies outside the domain of the conjugate link")]
    ConjugateDomainError { eigenvalue: f64 },

    #[error("{argument} is not in the domain of F (smallest eigenvalue {min_eig:e})")]
    NotInDomain { argument: &'static str, min_eig: f64 },

    #[error("invalid link parameter: {0}")]
    InvalidLink(String),

    #[error("all basis matrices are numerically zero")]
    EmptyBasis,

    #[error("subspace has a nonzero offset; a linear subspace is required")]
    NotLinear,

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("starting point is infeasible: {0}")]
    InfeasibleStart(String),

    #[error("no step keeps the matrix positive definite along the search direction")]
    NoInterior,

    #[error("subspace is not a Jordan algebra containing the identity")]
    NotJordan,

    #[error("projection of the sample covariance onto the subspace is not positive definite")]
    ProjectionNotPd,

    #[error("link is not essentially smooth")]
    NotEssentiallySmooth,

    #[error("no positive definite matrix matches the prescribed entries")]
    NoPdExtension,

    #[error("unsupported link for this operation: {0}")]
    UnsupportedLink(String),

    #[error("information matrix is singular")]
    SingularInformation,

    #[error("inner solve did not converge (status {0})")]
    NotConverged(&'static str),

    #[error("line search optimum lies on the boundary of the cone")]
    BoundaryOptimum,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = core::result::Result<T, Error>;
