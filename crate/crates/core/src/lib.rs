//! Reproducing-kernel Hilbert space transforms.
//!
//! * [`kernel`]: positive definite kernels, Gram matrices and PD checks.
//! * [`rkhs`]: finite kernel expansions, interpolation and frame expansions.
//! * [`effective`]: sequences of orthogonal projections, energy identities
//!   and the Kaczmarz solver.
//! * [`measure`]: the transform `T_K` on measures and functionals, and the
//!   set-intersection kernel on finite measure spaces.
//! * [`gaussian`]: seeded Gaussian sampling, Brownian paths and white-noise
//!   set fields.
//! * [`fourier`]: the Fourier transform of path functionals of Brownian
//!   motion with closed-form oracles.

// `!(a < b)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod effective;
pub mod error;
pub mod fourier;
pub mod gaussian;
pub mod kernel;
pub mod linalg;
pub mod measure;
pub mod rkhs;

pub use error::{Error, Result};
pub use kernel::{Kernel, PdKernel};
pub use rkhs::RkhsElement;
