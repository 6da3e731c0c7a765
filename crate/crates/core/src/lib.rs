//! Numerical toolkit for the curl Sobolev quotient of vector fields on a
//! periodic box: spectral field operators, nonlinear gauge fixing, the
//! explicit zero-mode pair and its residuals, quotient minimization with
//! recentering, and conformal transport to the three-sphere.
//!
//! Fields are immutable once constructed and every operation is a pure
//! function of its inputs, so concurrent use on distinct data is safe.
//! Reductions use pairwise summation and parallel loops write disjoint
//! slices; results are bitwise deterministic for a fixed build.

pub mod closed_forms;
pub mod conformal;
pub mod error;
pub mod families;
mod fft;
pub mod field;
pub mod gauge;
pub mod grid;
pub mod io;
pub mod ops;
pub mod util;
pub mod variational;

pub use error::{Error, Result};
pub use field::{ScalarField, SpinorField, VectorField};
pub use grid::Grid;
