//! Mean oscillation functionals, Whitney decompositions and extension
//! operators on planar domains, evaluated on uniform grids.

pub mod approximation;
pub mod epsdelta;
pub mod error;
pub mod extension;
pub mod geometry;
pub mod gridfield;
pub mod numeric;
pub mod oracle;
pub mod oscillation;
pub mod scenarios;
pub mod whitney;

pub use error::{Error, Result};
