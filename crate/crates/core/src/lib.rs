//! Least gradient problems on planar annuli, solved through their
//! equivalence with boundary-to-boundary optimal transport.
//!
//! The pipeline: check the admissibility conditions on the boundary datum,
//! atomize its tangential derivative, solve the transport problem exactly,
//! rasterize the transport density and flow, and rebuild the least gradient
//! function from the transport rays. Every stage reports the residuals of
//! the identities it is supposed to satisfy.

pub mod admissibility;
pub mod boundary;
pub mod config;
pub mod density;
pub mod error;
pub mod geometry;
pub mod instances;
pub mod pipeline;
pub mod recovery;
pub mod report;
pub mod svg;
pub mod transport;

pub use error::{Error, Result};
