use serde::Serialize;

use super::chain::CorrelationChain;
use super::operator::{apply_c_into, apply_v_into, ChainRates, Workspace};
use crate::error::{Error, Result};
use crate::model::GridModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainOptions {
    pub t_end: f64,
    pub dt: f64,
    pub output_every: usize,
}

impl ChainOptions {
    pub fn new(t_end: f64, dt: f64) -> Self {
        Self {
            t_end,
            dt,
            output_every: 1,
        }
    }

    pub fn every(mut self, n: usize) -> Self {
        self.output_every = n.max(1);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainTrajectory {
    pub epsilon: f64,
    pub times: Vec<f64>,
    pub chains: Vec<CorrelationChain>,
    /// `sup |k2 - k1 (x) k1|` at each stored time.
    pub chaos_residuals: Vec<f64>,
    /// Largest asymmetry of `k2` removed by the per-step symmetrization.
    pub max_asymmetry: f64,
}

impl ChainTrajectory {
    pub fn last(&self) -> &CorrelationChain {
        self.chains
            .last()
            .expect("trajectory holds the initial chain")
    }

    fn push(&mut self, t: f64, chain: CorrelationChain) {
        self.chaos_residuals.push(chain.chaos_residual());
        self.times.push(t);
        self.chains.push(chain);
    }
}

struct Rhs<'a> {
    model: &'a GridModel,
    epsilon: f64,
    ws: Workspace,
    c_part: ChainRates,
}

impl Rhs<'_> {
    fn eval(&mut self, chain: &CorrelationChain, out: &mut ChainRates) {
        apply_v_into(chain, self.model, out, &mut self.ws);
        if self.epsilon != 0.0 {
            apply_c_into(chain, self.model, &mut self.c_part);
            for (o, c) in out.k1.iter_mut().zip(&self.c_part.k1) {
                *o += self.epsilon * c;
            }
            for (o, c) in out.k2.iter_mut().zip(&self.c_part.k2) {
                *o += self.epsilon * c;
            }
        }
    }
}

fn axpy_into(dst: &mut CorrelationChain, base: &CorrelationChain, h: f64, r: &ChainRates) {
    for ((d, b), v) in dst.k1.iter_mut().zip(&base.k1).zip(&r.k1) {
        *d = b + h * v;
    }
    for ((d, b), v) in dst.k2.iter_mut().zip(&base.k2).zip(&r.k2) {
        *d = b + h * v;
    }
    if dst.order() == 1 {
        dst.refresh_product();
    }
}

/// RK4 for `d r/dt = (V + eps C) r`, symmetrizing `k2` after every step.
pub fn evolve_chain(
    chain0: &CorrelationChain,
    model: &GridModel,
    epsilon: f64,
    opts: ChainOptions,
) -> Result<ChainTrajectory> {
    if !chain0.domain().same_as(&model.domain) {
        return Err(Error::DomainMismatch(
            "chain and model live on different grids".into(),
        ));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::param(
            "params.epsilon",
            format!("must lie in [0, 1], got {epsilon}"),
        ));
    }
    if !(opts.t_end >= 0.0 && opts.t_end.is_finite()) {
        return Err(Error::param(
            "run.t_end",
            format!("must be finite and >= 0, got {}", opts.t_end),
        ));
    }
    if !(opts.dt > 0.0 && opts.dt.is_finite()) {
        return Err(Error::param(
            "run.dt",
            format!("must be > 0, got {}", opts.dt),
        ));
    }
    let steps = ((opts.t_end / opts.dt) - 1e-9).ceil().max(0.0) as usize;
    let dt = if steps == 0 {
        0.0
    } else {
        opts.t_end / steps as f64
    };
    let m = chain0.points();

    let mut traj = ChainTrajectory {
        epsilon,
        times: Vec::new(),
        chains: Vec::new(),
        chaos_residuals: Vec::new(),
        max_asymmetry: 0.0,
    };
    traj.push(0.0, chain0.clone());

    let mut f = Rhs {
        model,
        epsilon,
        ws: Workspace::new(m),
        c_part: ChainRates::zeros(m),
    };
    let mut y = chain0.clone();
    let mut stage = chain0.clone();
    let mut k: [ChainRates; 4] = std::array::from_fn(|_| ChainRates::zeros(m));

    for step in 1..=steps {
        f.eval(&y, &mut k[0]);
        axpy_into(&mut stage, &y, 0.5 * dt, &k[0]);
        f.eval(&stage, &mut k[1]);
        axpy_into(&mut stage, &y, 0.5 * dt, &k[1]);
        f.eval(&stage, &mut k[2]);
        axpy_into(&mut stage, &y, dt, &k[2]);
        f.eval(&stage, &mut k[3]);

        let w = dt / 6.0;
        for i in 0..m {
            y.k1[i] += w * (k[0].k1[i] + 2.0 * k[1].k1[i] + 2.0 * k[2].k1[i] + k[3].k1[i]);
        }
        for i in 0..m * m {
            y.k2[i] += w * (k[0].k2[i] + 2.0 * k[1].k2[i] + 2.0 * k[2].k2[i] + k[3].k2[i]);
        }
        if y.order() == 1 {
            y.refresh_product();
        }
        let asym = y.symmetrize();
        traj.max_asymmetry = traj.max_asymmetry.max(asym);

        let t = step as f64 * dt;
        if !y.is_finite() || y.sup_k2() > 1e200 {
            return Err(Error::Instability {
                step,
                time: t,
                reason: "chain entries overflowed".into(),
            });
        }
        if step % opts.output_every == 0 || step == steps {
            traj.push(t, y.clone());
        }
    }
    if traj.max_asymmetry > 0.0 {
        log::debug!(
            "chain evolution removed k2 asymmetry up to {:e}",
            traj.max_asymmetry
        );
    }
    Ok(traj)
}
