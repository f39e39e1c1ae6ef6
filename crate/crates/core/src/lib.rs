//! Degeneracies of a complex-coupled, non-integrable multi-level pairing
//! Hamiltonian: exceptional points, diabolic and pseudo-diabolic points,
//! their monodromy and the divergence of observables near them.

pub mod acceptance;
pub mod atlas;
pub mod discriminant;
pub mod error;
pub mod linalg;
pub mod model;
pub mod monodromy;
pub mod observables;
pub mod poly;
pub mod spectra;

pub use error::{Error, Result};
pub use model::{LevelSpec, ModelSpec, PairingModel};
pub use num_complex::Complex64;
