//! Discretization, minimization and cross-checks of the L^p mean-distortion
//! energy and of Φ-weighted Dirichlet energies for piecewise-linear planar
//! diffeomorphisms with prescribed boundary values.
//!
//! Points of the plane are [`Point`] (`Complex64`), so Wirtinger derivatives,
//! Hopf differentials and quadratic differentials share one arithmetic.
//!
//! Conventions used throughout:
//! * `‖Df‖²` is the Hilbert–Schmidt norm squared, `2(|f_z|² + |f_z̄|²)`;
//! * `K_f = ‖Df‖² / (2 J_f)` where `J_f > 0`, `K_f = 1` where `J_f = 0`.

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod hopf;
pub mod io;
pub mod mapping;
pub mod optimize;
pub mod quaddiff;
pub mod report;
pub mod sparse;
pub mod svg;
pub mod synth;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// A point of the plane, `x + iy`.
pub type Point = Complex64;
