//! Fixed-point solution of the kinetic equation in its mild (integral) form.
//!
//! With `eps = max(0, <a+> - m)` and `u = exp(-eps t) rho`,
//!
//! ```text
//! u_t = rho0 exp(-Phi_t) + int_0^t exp(-(Phi_t - Phi_s)) (a+ * u_s) ds,
//! Phi_t = (m + eps) t + int_0^t exp(eps s) (a- * u_s) ds,
//! ```
//!
//! and each Picard sweep recomputes `Phi` and the Duhamel integral from the
//! previous iterate on a uniform time grid (trapezoid rule).

use super::DensityField;
use crate::error::{Error, Result};
use crate::model::GridModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    pub t_end: f64,
    pub n_steps: usize,
    pub max_iter: usize,
    /// Stop when the sup distance between successive iterates of `rho`,
    /// relative to `max(1, sup rho)`, drops below this.
    pub tol: f64,
}

impl PicardOptions {
    pub fn new(t_end: f64, n_steps: usize) -> Self {
        Self {
            t_end,
            n_steps,
            max_iter: 500,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PicardResult {
    pub times: Vec<f64>,
    pub fields: Vec<DensityField>,
    pub iterations: usize,
    pub residual: f64,
    /// Sup distance between successive iterates, one entry per sweep.
    pub history: Vec<f64>,
}

impl PicardResult {
    pub fn last(&self) -> &DensityField {
        self.fields.last().expect("at least the initial field")
    }
}

pub fn picard_solve(
    rho0: &DensityField,
    model: &GridModel,
    opts: PicardOptions,
) -> Result<PicardResult> {
    if !rho0.domain().same_as(&model.domain) {
        return Err(Error::DomainMismatch(
            "density and model live on different grids".into(),
        ));
    }
    if !(opts.t_end > 0.0 && opts.t_end.is_finite()) {
        return Err(Error::param(
            "run.t_end",
            format!("must be finite and > 0, got {}", opts.t_end),
        ));
    }
    if opts.n_steps == 0 {
        return Err(Error::param("run.n_steps", "must be >= 1"));
    }
    let n = rho0.values().len();
    let steps = opts.n_steps;
    let dt = opts.t_end / steps as f64;
    let m = model.mortality;
    let shift = (model.plus_mass() - m).max(0.0);
    let times: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
    let growth: Vec<f64> = times.iter().map(|t| (shift * t).exp()).collect();

    let u0 = rho0.values();
    let mut u: Vec<Vec<f64>> = vec![u0.to_vec(); steps + 1];
    let mut next: Vec<Vec<f64>> = vec![vec![0.0; n]; steps + 1];
    let mut conv_minus = vec![vec![0.0; n]; steps + 1];
    let mut conv_plus = vec![vec![0.0; n]; steps + 1];
    let mut history = Vec::new();
    let mut residual = f64::INFINITY;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        for k in 0..=steps {
            model.convolve_minus(&u[k], &mut conv_minus[k]);
            model.convolve_plus(&u[k], &mut conv_plus[k]);
        }
        for i in 0..n {
            let mut duhamel = 0.0;
            let mut phi = 0.0;
            next[0][i] = u0[i];
            for k in 0..steps {
                let dg = 0.5
                    * dt
                    * (growth[k] * conv_minus[k][i] + growth[k + 1] * conv_minus[k + 1][i]);
                let dphi = (m + shift) * dt + dg;
                let decay = (-dphi).exp();
                phi += dphi;
                duhamel =
                    duhamel * decay + 0.5 * dt * (conv_plus[k][i] * decay + conv_plus[k + 1][i]);
                next[k + 1][i] = u0[i] * (-phi).exp() + duhamel;
            }
        }

        let mut dist = 0.0f64;
        let mut scale = 1.0f64;
        for k in 0..=steps {
            for i in 0..n {
                let (a, b) = (next[k][i] * growth[k], u[k][i] * growth[k]);
                if !a.is_finite() {
                    return Err(Error::Instability {
                        step: k,
                        time: times[k],
                        reason: format!("non-finite Picard iterate at sweep {iterations}"),
                    });
                }
                dist = dist.max((a - b).abs());
                scale = scale.max(a.abs());
            }
        }
        std::mem::swap(&mut u, &mut next);
        let rel = dist / scale;
        if let Some(&prev) = history.last() {
            if rel > prev && iterations > 8 {
                log::warn!(
                    "Picard sweep {iterations}: iterate distance grew from {prev:e} to {rel:e}"
                );
            }
        }
        history.push(rel);
        residual = rel;
        if rel < opts.tol {
            break;
        }
    }
    if residual >= opts.tol {
        return Err(Error::NoConvergence {
            iterations,
            residual,
        });
    }

    let domain = rho0.domain().clone();
    let fields = u
        .into_iter()
        .zip(&growth)
        .map(|(uk, g)| {
            DensityField::from_raw(
                domain.clone(),
                uk.into_iter().map(|v| (v * g).max(0.0)).collect(),
            )
        })
        .collect();
    Ok(PicardResult {
        times,
        fields,
        iterations,
        residual,
        history,
    })
}
