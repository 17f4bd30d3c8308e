//! Meshless finite differences for the 2D Helmholtz equation with
//! oscillatory Bessel kernels `J0(k r)`.
//!
//! Weights for the Laplacian and boundary operators come from regularized
//! local interpolation on nearest-neighbour stencils; the global complex
//! sparse system is assembled in parallel and solved with a sparse LU.

pub mod analytic;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod localreg;
pub mod medium;
pub mod operators;
pub mod specfun;
pub mod system;

pub use error::{Error, Result};
pub use harness::{Cell, ExperimentReport};
pub use geometry::{NodeSet, Point, Rect, Stencil};
pub use localreg::{KappaMode, LocalSystem, RegularizationPolicy};
pub use medium::{Raster, SpeedModel};
pub use system::{GridSpec, ProblemSpec, Source, SparseSystem};
pub use operators::{BoundaryKind, OperatorKind, OperatorSpec, WeightRow};
pub use num_complex::Complex64;
