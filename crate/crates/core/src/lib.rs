//! Spectral toolkit for low-Mach compressible Navier-Stokes flow on
//! anisotropic periodic boxes: acoustic filtering, resonance analysis,
//! dyadic norms and the full, incompressible and averaged solvers.

pub mod acoustic;
pub mod besov;
pub mod error;
pub mod field;
pub mod interaction;
pub mod lattice;
pub mod random;
pub mod resonance;
pub mod snapshot;
pub mod solver;
pub mod thermo;
pub mod transform;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
