use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("eigensolver failed to converge at g = {g}")]
    NoConvergence { g: Complex64 },

    #[error("ambiguous state matching between g = {from} and g = {to} after step refinement")]
    AmbiguousMatching { from: Complex64, to: Complex64 },

    #[error("discriminant interpolation ill-conditioned (held-out relative residual {residual:.3e})")]
    IllConditioned { residual: f64 },

    #[error("eigenvector self-orthogonal at g = {g} (|b(u,u)| = {norm:.3e}); move further from the degeneracy")]
    SelfOrthogonal { g: Complex64, norm: f64 },

    #[error("power-law fit rejected: {0}")]
    FitRejected(String),

    #[error("loop encloses {found} degeneracies, expected at most one")]
    LoopEnclosure { found: usize },

    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
