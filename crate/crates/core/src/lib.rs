//! Modal boundary stabilization of the reaction-diffusion equation on the
//! disk and the ball, with spectral Galerkin simulation and decay diagnostics.

// `!(x < y)` deliberately rejects NaN alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod controller;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod io;
pub mod lifting;
pub mod linalg;
pub mod rng;
pub mod scalar;
pub mod simulator;
pub mod special;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Scalar used by the spectral pipeline.
pub type Real = f64;
pub type Matrix = nalgebra::DMatrix<Real>;
pub type Vector = nalgebra::DVector<Real>;
pub type Rule = special::QuadratureRule<Real>;
pub type Fit = diagnostics::DecayFit<Real>;
