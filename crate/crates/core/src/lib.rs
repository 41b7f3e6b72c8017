//! Numerical laboratory for fixed-length elastic curves.
//!
//! Planar curves are stored by their signed curvature on a uniform arclength
//! grid, space curves by unit-speed positions. On top of that sit the p-bending
//! energy, profile structure checks (well-periodic, m/2-fold), a constrained
//! critical-point solver, the cut-and-paste competitor constructions and a
//! verification harness.

pub mod curve;
pub mod energy;
pub mod error;
pub mod harness;
pub mod perturb;
pub mod profiles;
pub mod solver;

pub use error::{Error, Result};
