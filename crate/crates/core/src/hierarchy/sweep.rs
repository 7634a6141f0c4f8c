use rayon::prelude::*;
use serde::Serialize;

use super::chain::{chain_distance, sub_poissonian_norm, CorrelationChain};
use super::evolve::{evolve_chain, ChainOptions, ChainTrajectory};
use crate::error::{Error, Result};
use crate::model::GridModel;

/// Validity horizon `T(a) = (a* - a) / (<a+> + <a-> e^{-a})` of the chain
/// evolution between the scales `a < a*`.
pub fn time_horizon(alpha: f64, alpha_star: f64, plus_mass: f64, minus_mass: f64) -> Result<f64> {
    if !(alpha < alpha_star) {
        return Err(Error::param(
            "hierarchy.alpha",
            format!("alpha = {alpha} must be below alpha_star = {alpha_star}"),
        ));
    }
    let rate = plus_mass + minus_mass * (-alpha).exp();
    if rate <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((alpha_star - alpha) / rate)
}

/// `e^{a*} theta < 1`; `None` when no domination constant is available.
pub fn domination_holds(alpha_star: f64, theta: Option<f64>) -> Option<bool> {
    theta.map(|t| alpha_star.exp() * t < 1.0)
}

/// `M(kappa) = (2 / (e kappa))^2 (||a-|| + ||a+|| e^{a*})` with sup norms of the kernels.
pub fn rate_constant(kappa: f64, minus_sup: f64, plus_sup: f64, alpha_star: f64) -> f64 {
    let c = 2.0 / (std::f64::consts::E * kappa);
    c * c * (minus_sup + plus_sup * alpha_star.exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub t_end: f64,
    pub dt: f64,
    pub alpha: f64,
    pub alpha_star: f64,
    pub output_every: usize,
}

impl SweepOptions {
    pub fn new(t_end: f64, dt: f64, alpha: f64, alpha_star: f64) -> Self {
        Self {
            t_end,
            dt,
            alpha,
            alpha_star,
            output_every: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonConvergenceReport {
    pub epsilons: Vec<f64>,
    /// `sup_s ||r_{s,eps} - r_{s,0}||_alpha` over the stored times.
    pub distances: Vec<f64>,
    /// Slope of `ln distance` against `ln eps`; `None` with fewer than two usable points.
    pub fitted_order: Option<f64>,
    pub fit_intercept: Option<f64>,
    pub t_end: f64,
    pub alpha: f64,
    pub alpha_star: f64,
    pub kappa: f64,
    pub rate_constant: f64,
    /// Reference bound `eps t M(kappa) ||r_0||_{alpha*}` for each eps.
    pub reference_bounds: Vec<f64>,
    pub time_horizon: f64,
    pub beyond_horizon: bool,
}

/// Least-squares slope and intercept of `y` against `x`.
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

fn sup_distance(a: &ChainTrajectory, b: &ChainTrajectory, alpha: f64) -> Result<f64> {
    let mut d = 0.0f64;
    for (x, y) in a.chains.iter().zip(&b.chains) {
        d = d.max(chain_distance(x, y, alpha)?);
    }
    Ok(d)
}

/// Compare the rescaled chain at each `eps` against the `eps = 0` chain.
pub fn epsilon_sweep(
    chain0: &CorrelationChain,
    model: &GridModel,
    epsilons: &[f64],
    opts: SweepOptions,
) -> Result<EpsilonConvergenceReport> {
    if epsilons.is_empty() {
        return Err(Error::param("sweep.epsilons", "need at least one value"));
    }
    let horizon = time_horizon(
        opts.alpha,
        opts.alpha_star,
        model.plus_mass(),
        model.minus_mass(),
    )?;
    let chain_opts = ChainOptions::new(opts.t_end, opts.dt).every(opts.output_every);
    let reference = evolve_chain(chain0, model, 0.0, chain_opts)?;

    let distances = epsilons
        .par_iter()
        .map(|&eps| {
            if eps == 0.0 {
                return Ok(0.0);
            }
            let run = evolve_chain(chain0, model, eps, chain_opts)?;
            sup_distance(&run, &reference, opts.alpha)
        })
        .collect::<Result<Vec<f64>>>()?;

    let (lx, ly): (Vec<f64>, Vec<f64>) = epsilons
        .iter()
        .zip(&distances)
        .filter(|(e, d)| **e > 0.0 && **d > 0.0)
        .map(|(e, d)| (e.ln(), d.ln()))
        .unzip();
    let fit = linear_fit(&lx, &ly);

    let kappa = opts.alpha_star - opts.alpha;
    let mk = rate_constant(
        kappa,
        model.a_minus.supnorm(),
        model.a_plus.supnorm(),
        opts.alpha_star,
    );
    let r0 = sub_poissonian_norm(chain0, opts.alpha_star);
    let beyond = opts.t_end > horizon;
    if beyond {
        log::warn!(
            "sweep horizon t = {} exceeds T(alpha) = {horizon}",
            opts.t_end
        );
    }
    Ok(EpsilonConvergenceReport {
        epsilons: epsilons.to_vec(),
        distances,
        fitted_order: fit.map(|f| f.0),
        fit_intercept: fit.map(|f| f.1),
        t_end: opts.t_end,
        alpha: opts.alpha,
        alpha_star: opts.alpha_star,
        kappa,
        rate_constant: mk,
        reference_bounds: epsilons.iter().map(|e| e * opts.t_end * mk * r0).collect(),
        time_horizon: horizon,
        beyond_horizon: beyond,
    })
}
