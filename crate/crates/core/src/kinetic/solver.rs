use serde::Serialize;

use super::DensityField;
use crate::error::{Error, Result};
use crate::model::GridModel;

/// Relative undershoot below which negative values are clamped to zero.
const CLAMP_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub sup: f64,
    pub min: f64,
    pub dt: f64,
}

/// Stored solution snapshots.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub fields: Vec<DensityField>,
    pub diagnostics: Vec<StepDiagnostics>,
    /// Number of grid values clamped from a tiny negative undershoot to 0.
    pub clamp_count: usize,
}

impl Trajectory {
    pub fn last(&self) -> &DensityField {
        self.fields
            .last()
            .expect("trajectory always holds the initial field")
    }

    pub fn sup_series(&self) -> Vec<f64> {
        self.fields.iter().map(DensityField::sup).collect()
    }

    pub fn mean_series(&self) -> Vec<f64> {
        self.fields.iter().map(DensityField::mean).collect()
    }

    fn push(&mut self, t: f64, field: DensityField, dt: f64) {
        self.diagnostics.push(StepDiagnostics {
            sup: field.sup(),
            min: field.min(),
            dt,
        });
        self.times.push(t);
        self.fields.push(field);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub t_end: f64,
    pub dt: f64,
    /// Store every `output_every`-th step (the final state is always stored).
    pub output_every: usize,
}

impl IntegrateOptions {
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

/// `0.1 / (m + <a+> + <a-> ||rho0||)`.
pub fn default_dt(model: &GridModel, rho0: &DensityField) -> f64 {
    let rate = model.mortality + model.plus_mass() + model.minus_mass() * rho0.sup();
    if rate > 0.0 {
        0.1 / rate
    } else {
        0.1
    }
}

fn check_domain(rho: &DensityField, model: &GridModel) -> Result<()> {
    if rho.domain().same_as(&model.domain) {
        Ok(())
    } else {
        Err(Error::DomainMismatch(
            "density and model live on different grids".into(),
        ))
    }
}

/// Scratch buffers for repeated right-hand-side evaluation.
pub(crate) struct RhsWork {
    plus: Vec<f64>,
    minus: Vec<f64>,
}

impl RhsWork {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            plus: vec![0.0; n],
            minus: vec![0.0; n],
        }
    }
}

pub(crate) fn rhs_into(model: &GridModel, rho: &[f64], out: &mut [f64], work: &mut RhsWork) {
    model.convolve_plus(rho, &mut work.plus);
    model.convolve_minus(rho, &mut work.minus);
    let m = model.mortality;
    for i in 0..rho.len() {
        out[i] = -m * rho[i] - work.minus[i] * rho[i] + work.plus[i];
    }
}

/// Pointwise kinetic right-hand side `-m rho - (a- * rho) rho + (a+ * rho)`.
pub fn rhs(rho: &DensityField, model: &GridModel) -> Result<Vec<f64>> {
    check_domain(rho, model)?;
    let n = rho.values().len();
    let mut out = vec![0.0; n];
    rhs_into(model, rho.values(), &mut out, &mut RhsWork::new(n));
    Ok(out)
}

/// Classical fixed-step RK4.
pub fn integrate(
    rho0: &DensityField,
    model: &GridModel,
    opts: IntegrateOptions,
) -> Result<Trajectory> {
    check_domain(rho0, model)?;
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

    let n = rho0.values().len();
    let domain = rho0.domain().clone();
    let mut traj = Trajectory {
        times: Vec::new(),
        fields: Vec::new(),
        diagnostics: Vec::new(),
        clamp_count: 0,
    };
    traj.push(0.0, rho0.clone(), dt);

    let mut y = rho0.values().to_vec();
    let mut work = RhsWork::new(n);
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut stage = vec![0.0; n];

    for step in 1..=steps {
        rhs_into(model, &y, &mut k1, &mut work);
        for i in 0..n {
            stage[i] = y[i] + 0.5 * dt * k1[i];
        }
        rhs_into(model, &stage, &mut k2, &mut work);
        for i in 0..n {
            stage[i] = y[i] + 0.5 * dt * k2[i];
        }
        rhs_into(model, &stage, &mut k3, &mut work);
        for i in 0..n {
            stage[i] = y[i] + dt * k3[i];
        }
        rhs_into(model, &stage, &mut k4, &mut work);
        for i in 0..n {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }

        let t = step as f64 * dt;
        if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
            return Err(Error::Instability {
                step,
                time: t,
                reason: format!("non-finite value {bad}"),
            });
        }
        let sup = y.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        for v in y.iter_mut().filter(|v| **v < 0.0) {
            if *v < -CLAMP_TOLERANCE * sup {
                return Err(Error::Instability {
                    step,
                    time: t,
                    reason: format!("negative undershoot {v:e} against sup {sup:e}; reduce dt"),
                });
            }
            *v = 0.0;
            traj.clamp_count += 1;
        }

        if step % opts.output_every == 0 || step == steps {
            traj.push(t, DensityField::from_raw(domain.clone(), y.clone()), dt);
        }
    }
    if traj.clamp_count > 0 {
        log::debug!(
            "kinetic integrate clamped {} tiny negative values",
            traj.clamp_count
        );
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{periodize, KernelSpec, TorusDomain};
    use crate::kinetic::bernoulli_exact;
    use crate::model::ModelParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(m: f64, plus_mass: f64, minus_mass: f64, dom: &TorusDomain) -> GridModel {
        ModelParams::new(
            m,
            KernelSpec::gaussian_with_mass(plus_mass, 1.0, 1).unwrap(),
            KernelSpec::gaussian_with_mass(minus_mass, 1.0, 1).unwrap(),
        )
        .unwrap()
        .on_grid(dom)
        .unwrap()
    }

    fn random_field(dom: &TorusDomain, seed: u64, lo: f64, hi: f64) -> DensityField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DensityField::new(
            dom.clone(),
            (0..dom.len()).map(|_| rng.random_range(lo..hi)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn extinction_is_fixed_point() {
        let dom = TorusDomain::new(1, 20.0, 32).unwrap();
        let gm = model(1.0, 3.0, 2.0, &dom);
        let zero = DensityField::constant(dom.clone(), 0.0).unwrap();
        assert!(rhs(&zero, &gm).unwrap().iter().all(|&v| v == 0.0));
        let traj = integrate(&zero, &gm, IntegrateOptions::new(2.0, 0.01)).unwrap();
        assert!(traj
            .fields
            .iter()
            .all(|f| f.values().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn carrying_capacity_is_steady() {
        let dom = TorusDomain::new(1, 20.0, 32).unwrap();
        let gm = model(1.0, 3.0, 2.0, &dom);
        let q = gm.carrying_capacity().unwrap();
        let r = rhs(&DensityField::constant(dom, q).unwrap(), &gm).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn rhs_matches_double_loop() {
        let dom = TorusDomain::new(1, 6.0, 8).unwrap();
        let ap = KernelSpec::gaussian(0.9, 0.8, 1).unwrap();
        let am = KernelSpec::ball(1.3, 1.6, 1).unwrap();
        let gm = ModelParams::new(0.7, ap.clone(), am.clone())
            .unwrap()
            .on_grid(&dom)
            .unwrap();
        let rho = random_field(&dom, 3, 0.0, 2.0);
        let (gp, gmk) = (periodize(&ap, &dom).unwrap(), periodize(&am, &dom).unwrap());
        let h = dom.cell_volume();
        let v = rho.values();
        let got = rhs(&rho, &gm).unwrap();
        for i in 0..dom.len() {
            let mut plus = 0.0;
            let mut minus = 0.0;
            for j in 0..dom.len() {
                plus += gp.between(i, j) * v[j] * h;
                minus += gmk.between(i, j) * v[j] * h;
            }
            let expect = -0.7 * v[i] - minus * v[i] + plus;
            assert!((got[i] - expect).abs() <= 1e-10 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn constant_data_follows_bernoulli() {
        let dom = TorusDomain::new(1, 20.0, 16).unwrap();
        let gm = model(1.0, 3.0, 2.0, &dom);
        let traj = integrate(
            &DensityField::constant(dom, 0.2).unwrap(),
            &gm,
            IntegrateOptions::new(3.0, 1e-3).every(100),
        )
        .unwrap();
        for (t, f) in traj.times.iter().zip(&traj.fields) {
            let exact = bernoulli_exact(0.2, 1.0, gm.plus_mass(), gm.minus_mass(), *t).unwrap();
            assert!((f.max() - exact).abs() <= 1e-9 * exact);
            assert!(f.max() - f.min() <= 1e-10 * f.sup());
        }
    }

    #[test]
    fn gronwall_envelope_subcritical() {
        let dom = TorusDomain::new(1, 20.0, 64).unwrap();
        let gm = model(2.5, 1.0, 0.5, &dom);
        let rho0 = random_field(&dom, 9, 0.0, 3.0);
        let traj = integrate(&rho0, &gm, IntegrateOptions::new(5.0, 0.01)).unwrap();
        let s0 = rho0.sup();
        for (t, f) in traj.times.iter().zip(&traj.fields) {
            assert!(f.sup() <= s0 * (-t * (2.5 - gm.plus_mass())).exp() * (1.0 + 1e-8));
        }
    }

    #[test]
    fn step_doubling_fourth_order() {
        let dom = TorusDomain::new(1, 10.0, 32).unwrap();
        let gm = model(0.5, 2.0, 1.0, &dom);
        let rho0 = DensityField::from_fn(dom.clone(), |x| {
            1.0 + 0.8 * (2.0 * std::f64::consts::PI * x[0] / 10.0).sin()
        })
        .unwrap();
        let run = |dt: f64| {
            integrate(&rho0, &gm, IntegrateOptions::new(2.0, dt))
                .unwrap()
                .last()
                .values()
                .to_vec()
        };
        let (a, b, c) = (run(0.2), run(0.1), run(0.05));
        let diff = |x: &[f64], y: &[f64]| {
            x.iter()
                .zip(y)
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max)
        };
        let coarse = diff(&a, &b);
        let fine = diff(&b, &c);
        assert!(
            coarse <= 16.0 * 2.0 * fine,
            "coarse {coarse:e} fine {fine:e}"
        );
        assert!(
            coarse >= 16.0 / 2.0 * fine,
            "coarse {coarse:e} fine {fine:e}"
        );
    }

    #[test]
    fn instability_is_reported() {
        let dom = TorusDomain::new(1, 20.0, 16).unwrap();
        let gm = model(1.0, 3.0, 2.0, &dom);
        let rho0 = DensityField::constant(dom, 50.0).unwrap();
        let err = integrate(&rho0, &gm, IntegrateOptions::new(5.0, 0.5)).unwrap_err();
        assert!(matches!(err, Error::Instability { .. }), "{err}");
    }
}
