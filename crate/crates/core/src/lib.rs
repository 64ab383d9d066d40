//! Numerics for the Yang-Mills heat flow on an axis-aligned box.
//!
//! Fields are Lie-algebra valued differential forms sampled at the nodes of a
//! uniform grid with one ghost layer. The crate covers the covariant stencils,
//! RK4 time stepping, the cosine-spectral Neumann heat semigroup used as an
//! oracle for pointwise domination inequalities, parallel transport along
//! piecewise smooth paths, and the washer example whose raw Wilson loop
//! diverges.
//!
//! Everything here is `no_std` with `alloc`; IO lives in the `ymflow` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod algebra;
pub mod boundary;
pub mod error;
pub mod fields;
pub mod flow;
pub mod form;
pub mod grid;
pub mod group;
pub mod neumann;
pub mod ops;
pub mod quad;
pub mod special;
pub mod transport;
pub mod washer;

pub use algebra::{GroupId, LieAlgebraSpec};
pub use boundary::{apply_boundary, BoundaryKind, BoundarySpec};
pub use error::{Error, Result};
pub use form::{KForm, NormKind};
pub use grid::GridSpec;
pub use group::GroupMat;
