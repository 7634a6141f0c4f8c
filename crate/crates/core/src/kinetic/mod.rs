//! The kinetic equation `d rho/dt = -m rho - (a- * rho) rho + a+ * rho` on a
//! torus grid.

mod bernoulli;
mod field;
mod picard;
mod solver;

pub use bernoulli::{bernoulli_exact, BernoulliSolution, Regime};
pub use field::DensityField;
pub use picard::{picard_solve, PicardOptions, PicardResult};
pub use solver::{default_dt, integrate, rhs, IntegrateOptions, StepDiagnostics, Trajectory};
