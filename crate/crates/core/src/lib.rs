pub mod error;
pub mod invariants;
pub mod lie_core;
pub mod linalg;
pub mod poisson_structures;
pub mod quotient_geometry;
pub mod scalar;
pub mod tensor_algebra;
pub mod verification;

pub use error::{Error, Result};
