//! Subwavelength resonances and Fano-type transmission of a periodic screen
//! of resonator dimers in two dimensions.

pub mod capacitance;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod lattice_green;
pub mod layer_ops;
pub mod resonance;
pub mod scattering;
pub mod special;

pub use error::{Error, Result};
