//! Sharp constants and extremal functions for doubly weighted
//! Hardy–Littlewood–Sobolev (Stein–Weiss) inequalities on R^n, on
//! R^m x R^n with weights on the first factor, and on the Heisenberg group.
//!
//! The crate is layered bottom-up:
//!
//! - [`geometry`]: group law, homogeneous norm, dilations, weights.
//! - [`grid`]: log-polar quadrature grids and grid functions.
//! - [`kernel`]: the discretized Riesz kernel with singular cell averages.
//! - [`steinweiss`]: admissibility, the bilinear functional, closed forms.
//! - [`solver`]: alternating ascent and the Euler–Lagrange fixed point.
//! - [`diagnostics`]: concentration, symmetry and Sawyer–Wheeden checks.
//! - [`io`]: the text container for grid functions.

pub mod diagnostics;
pub mod error;
pub mod extremal;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod quadrature;
pub mod solver;
pub mod special;
pub mod steinweiss;

pub use error::{Error, Result};
pub use geometry::{SpaceKind, SpacePoint, SpaceSpec, WeightKind};
pub use grid::{GridFunction, QuadratureGrid};
pub use steinweiss::{SteinWeissOperator, SteinWeissParams};
