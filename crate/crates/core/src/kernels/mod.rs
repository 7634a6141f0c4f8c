//! Interaction kernels, the periodic grid they live on, and grid convolution.

mod convolve;
mod domain;
mod grid;
mod spec;

pub use convolve::{torus_convolve, torus_convolve_with, ConvolutionMethod};
pub use domain::TorusDomain;
pub use grid::{periodize, GridKernel};
pub use spec::{kernel_stats, KernelShape, KernelSpec, KernelStats};
