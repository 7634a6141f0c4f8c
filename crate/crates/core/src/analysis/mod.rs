//! Kernel-comparison functionals and checks of kinetic trajectories against
//! the boundedness and homogenization results.

mod certificate;
mod comparison;

pub use certificate::{
    certify_domination, certify_global_bound, certify_globally, k4_sandwich,
    verify_bound_on_trajectory, Conclusion, TheoremCertificate, TheoremId, TrajectoryRef, Verdict,
    DEFAULT_DELTA,
};
pub use comparison::{
    domination_theta, g_closed_form_balls, g_function, upsilon_infinity_mass, ComparisonRegime,
    Domination, KernelComparison, TIE_TOLERANCE,
};
