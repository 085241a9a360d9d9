//! Differentiable smoke transport and rendering.
//!
//! Densities live on cell-centered grids, velocities are curls of multi-scale
//! vector potentials, and images come from an emission-absorption ray marcher
//! with single-scattered light. Every operator has an exact adjoint so that
//! density sequences and their motion can be fitted to image sequences by
//! gradient descent (see [`optim::reconstruct`]).
//!
//! The `parallel` feature (on by default) runs the heavy per-cell and
//! per-pixel loops on rayon. Reductions combine fixed-size chunks in a fixed
//! order, so results are bit-identical with and without it and across thread
//! counts.

// `!(x > 0.0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod camera;
pub mod error;
pub mod eval;
pub mod grid;
pub mod io;
pub mod loss;
pub mod optim;
pub mod par;
pub mod potential;
pub mod real;
pub mod render;
pub mod synth;
pub mod transport;

pub use camera::Camera;
pub use error::{Error, Result};
pub use grid::{Dims, Image, ScalarGrid, VectorGrid};
pub use potential::{Kernel, MultiScalePotential};
pub use render::{LightConfig, RenderOptions};
pub use transport::Scheme;
