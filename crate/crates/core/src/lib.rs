//! Numerical laboratory for the Neumann Laplacian with a half-integer
//! Aharonov–Bohm pole.
//!
//! The magnetic eigenvalue problem is handled through its real-valued
//! gauge-equivalent form: the plain Laplacian on the domain cut along the
//! segment from the pole to its nearest boundary point, with functions
//! flipping sign across the cut. Everything here is `no_std` + `alloc`;
//! file formats, configuration and the command-line driver live in the
//! `abslit-lab` companion crate.

#![no_std]
// `!(x > 0.0)` is deliberate: it rejects NaN along with the rest.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::excessive_precision)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod asymptotics;
pub mod dense;
pub mod eigen;
pub mod ellipse;
pub mod energy;
mod error;
pub mod fem;
pub mod geometry;
pub mod mesh;
pub mod quadrature;
pub mod sparse;
pub mod special;

pub use error::{Error, Result};
pub use geometry::{Domain, DomainKind, Point, PoleConfig, WeightSpec};
pub use mesh::{MeshOptions, SlitMesh};
