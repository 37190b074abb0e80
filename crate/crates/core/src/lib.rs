//! Virtual element discretisation of a 3D Stokes flow coupled across a flat
//! interface to a 2D poroelastic Biot–Kirchhoff plate.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod coupling;
pub mod error;
pub mod geom;
pub mod harness;
pub mod linalg;
pub mod mesh;
pub mod params;
pub mod plate;
pub mod quadrature;
pub mod solver;
pub mod sparse;
pub mod stability;
pub mod stokes;

pub use error::{Result, VemError};
pub use params::ModelParams;
