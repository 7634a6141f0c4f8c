//! Numerical laboratory for a spatial birth-death process with competition.
//!
//! Three descriptions of the same model are provided and cross-checked:
//!
//! * [`particle_sim`]: exact event-driven simulation of the individual-based
//!   process on a periodic torus, with ensemble estimators for the density
//!   and the pair correlation function.
//! * [`hierarchy`]: the correlation-function chain truncated at second order,
//!   with the rescaled generator split as `V + eps * C`.
//! * [`kinetic`]: the nonlocal logistic (kinetic) equation obtained in the
//!   mean-field limit, solved by RK4 and by Picard iteration, together with
//!   the exact spatially homogeneous solution.
//!
//! [`analysis`] evaluates the kernel-comparison functionals and checks solver
//! output against the boundedness and homogenization results, and [`runner`]
//! drives experiments from a config file.

// Negated comparisons are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod error;
pub mod hierarchy;
pub mod io;
pub mod kernels;
pub mod kinetic;
pub mod model;
pub mod particle_sim;
pub mod runner;

pub use error::{Error, Result};
pub use kernels::{GridKernel, KernelShape, KernelSpec, KernelStats, TorusDomain};
pub use kinetic::DensityField;
pub use model::{GridModel, ModelParams};
