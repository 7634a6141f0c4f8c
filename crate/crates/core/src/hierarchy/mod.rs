//! Second-order truncation of the correlation-function chain in d = 1.
//!
//! The rescaled generator splits as `V + eps * C` with `V = A0 + B`. Order-3
//! correlations entering `B` are replaced by a closure.

mod chain;
mod evolve;
mod operator;
mod sweep;

pub use chain::{
    chain_distance, product_state, sub_poissonian_norm, Closure, CorrelationChain, NormScale,
};
pub use evolve::{evolve_chain, ChainOptions, ChainTrajectory};
pub use operator::{apply_c, apply_v, ChainRates};
pub use sweep::{
    domination_holds, epsilon_sweep, rate_constant, time_horizon, EpsilonConvergenceReport,
    SweepOptions,
};
