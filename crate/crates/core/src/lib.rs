//! Minimisation of manifold-constrained elastic energies `∫ φ(|∇u|)` for
//! fields with values in sphere quotients `S^q / G` (the nematic projective
//! plane among them), and analysis of the resulting singular set: line
//! defects detected by plaquette holonomy, point defects by cell degrees of a
//! local lift.

// NaN must fail range checks, which `!(x > 0.0)` does and `x <= 0.0` does not.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Axis loops index several coordinate arrays at once.
#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod config;
pub mod defects;
pub mod elastic;
pub mod error;
pub mod fields;
pub mod grid;
pub mod io;
pub mod lifting;
pub mod manifolds;
pub mod minimizer;

pub use error::{Error, Result};
