//! Numerical toolkit for capacitary inradii: p-capacities, Poincaré-Sobolev
//! constants, measure-density indices and an inequality verification harness,
//! all computed on rasterized domains.

pub mod analytic;
pub mod error;
pub mod shapes;
pub mod solver;

pub use error::{Error, Result};
pub use shapes::{BoxBounds, GridDomain, ShapeSpec, StandardBody};
