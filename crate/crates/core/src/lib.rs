//! Quasi-3D thermal simulation of quench propagation in superconducting
//! cable stacks.
//!
//! The cross-section is discretized with linear triangular finite elements
//! and the cable axis with modal spectral elements; the 3D operators are
//! Kronecker products of the two. A full 3D prism finite-element solver is
//! included as an independent reference.

pub mod adaptivity;
pub mod benchmark;
pub mod config;
pub mod error;
pub mod fem2d;
pub mod geometry;
pub mod output;
pub mod reference3d;
pub mod solver;
pub mod sparse;
pub mod spectral;
pub mod system;

pub use error::{Error, Result};
