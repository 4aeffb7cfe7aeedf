//! Surfaces in the future lightcone of Lorentz-Minkowski space `L^4`:
//! conformal rescalings, their normal geometry, and compact integral and
//! spectral checks.

pub mod cli;
pub mod compact;
pub mod error;
pub mod jets;
pub mod minkowski;
pub mod invariants;
pub mod surfaces;

pub use error::{Error, Result};
