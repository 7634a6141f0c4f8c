//! Exact stochastic simulation of the individual-based process on the torus.
//!
//! Each particle dies at rate `m + eps_eff * sum_y a-(x - y)` and produces an
//! offspring at rate `<a+>`, placed at a displacement drawn from
//! `a+ / <a+>`. Distances use the minimum-image convention.

mod config;
mod engine;
mod ensemble;
mod sampler;
mod sumtree;

pub use config::{init_poisson, init_poisson_constant, ParticleConfiguration};
pub use engine::{event_rates, Event, EventKind, Simulation};
pub use ensemble::{
    run_ensemble, run_rng, CorrelationEstimate, EnsembleOptions, EnsembleResult, EventTrace,
    RunStatus,
};
