use serde::Serialize;
use serde_json::{json, Value};

use super::config::{ExperimentConfig, ExperimentKind, KineticMethod, Resolved};
use crate::analysis::{
    certify_domination, certify_global_bound, certify_globally, k4_sandwich,
    verify_bound_on_trajectory, TheoremCertificate,
};
use crate::error::Result;
use crate::hierarchy::{
    epsilon_sweep, evolve_chain, product_state, sub_poissonian_norm, ChainOptions,
    CorrelationChain, NormScale, SweepOptions,
};
use crate::io::{CsvTable, OutputSet};
use crate::kinetic::{
    default_dt, integrate, picard_solve, DensityField, IntegrateOptions, PicardOptions,
    StepDiagnostics, Trajectory,
};
use crate::model::GridModel;
use crate::particle_sim::{run_ensemble, EnsembleOptions, EnsembleResult, RunStatus};

pub(super) struct Outcome {
    pub violated: bool,
    pub summary: Value,
}

pub(super) fn dispatch(
    cfg: &ExperimentConfig,
    res: &Resolved,
    hash: &str,
    out: &mut OutputSet,
) -> Result<Outcome> {
    let (mut summary, violated) = match cfg.kind {
        ExperimentKind::Simulate => (simulate(cfg, res, out)?, false),
        ExperimentKind::Kinetic => (kinetic(cfg, res, out)?, false),
        ExperimentKind::Hierarchy => (hierarchy(cfg, res, out)?, false),
        ExperimentKind::VlasovCompare => (vlasov(cfg, res, out)?, false),
        ExperimentKind::EpsilonSweep => (sweep(cfg, res, out)?, false),
        ExperimentKind::Certify => certify(cfg, res, out)?,
    };
    if let Value::Object(map) = &mut summary {
        map.insert("kind".into(), json!(cfg.kind.name()));
        map.insert("config_hash".into(), json!(hash));
        map.insert("violated".into(), json!(violated));
    }
    out.json("summary.json", &summary)?;
    Ok(Outcome { violated, summary })
}

fn ensemble_options(cfg: &ExperimentConfig, snapshot_times: Vec<f64>) -> EnsembleOptions {
    let r = &cfg.run;
    EnsembleOptions {
        snapshot_times,
        population_cap: r.population_cap,
        pair_bins: r.pair_bins,
        pair_r_max: cfg.pair_r_max(),
        ..EnsembleOptions::new(r.t_end, r.runs, r.seed)
    }
}

fn population_table(ens: &EnsembleResult) -> CsvTable {
    let mut t = CsvTable::new(&["t", "run", "population"]);
    for tr in &ens.traces {
        for &(time, n) in &tr.samples {
            t.push(vec![time.into(), tr.run.into(), n.into()]);
        }
    }
    t
}

fn simulate(cfg: &ExperimentConfig, res: &Resolved, out: &mut OutputSet) -> Result<Value> {
    let opts = ensemble_options(cfg, cfg.snapshot_times());
    let ens = run_ensemble(&res.params, &res.rho0, &opts)?;
    out.csv("population.csv", &population_table(&ens))?;

    let mut pairs = CsvTable::new(&["t", "r_bin_center", "k2_hat", "stderr"]);
    let mut dens = density_table(res.domain.dim(), "k1_hat");
    for est in &ens.estimates {
        for ((r, k), s) in est
            .r_bin_centers
            .iter()
            .zip(&est.k2_hat)
            .zip(&est.k2_stderr)
        {
            pairs.push(vec![est.t.into(), (*r).into(), (*k).into(), (*s).into()]);
        }
        push_field(&mut dens, est.t, &est.k1_hat);
    }
    out.csv("pair_correlation.csv", &pairs)?;
    out.csv("density.csv", &dens)?;

    let extinct = ens
        .traces
        .iter()
        .filter(|t| matches!(t.status, RunStatus::Extinct { .. }))
        .count();
    let snapshots: Vec<Value> = ens
        .estimates
        .iter()
        .map(|e| json!({"t": e.t, "n_runs": e.n_runs, "n_blown_up": e.n_blown_up, "density": e.density, "density_stderr": e.density_stderr}))
        .collect();
    Ok(json!({
        "runs": cfg.run.runs,
        "seed": cfg.run.seed,
        "blow_ups": ens.blow_ups(),
        "extinctions": extinct,
        "births": ens.traces.iter().map(|t| t.births).sum::<u64>(),
        "deaths": ens.traces.iter().map(|t| t.deaths).sum::<u64>(),
        "snapshots": snapshots,
    }))
}

fn density_table(dim: usize, value: &str) -> CsvTable {
    if dim == 1 {
        CsvTable::new(&["t", "x_index", value])
    } else {
        CsvTable::new(&["t", "x_index_0", "x_index_1", value])
    }
}

fn push_field(table: &mut CsvTable, t: f64, field: &DensityField) {
    let dom = field.domain();
    for (i, &v) in field.values().iter().enumerate() {
        if dom.dim() == 1 {
            table.push(vec![t.into(), i.into(), v.into()]);
        } else {
            let [a, b] = dom.unflatten(i);
            table.push(vec![t.into(), a.into(), b.into(), v.into()]);
        }
    }
}

fn trajectory_table(traj: &Trajectory) -> CsvTable {
    let mut table = density_table(traj.fields[0].domain().dim(), "rho");
    for (t, f) in traj.times.iter().zip(&traj.fields) {
        push_field(&mut table, *t, f);
    }
    table
}

fn step_size(cfg: &ExperimentConfig, model: &GridModel, rho0: &DensityField) -> f64 {
    cfg.run.dt.unwrap_or_else(|| default_dt(model, rho0))
}

/// Solve the kinetic equation with the configured method.
fn solve_kinetic(
    cfg: &ExperimentConfig,
    res: &Resolved,
    model: &GridModel,
) -> Result<(Trajectory, Value)> {
    let dt = step_size(cfg, model, &res.rho0);
    let every = cfg.run.output_every.unwrap_or(1);
    match cfg.run.method {
        KineticMethod::Rk4 => {
            let traj = integrate(
                &res.rho0,
                model,
                IntegrateOptions::new(cfg.run.t_end, dt).every(every),
            )?;
            let extra = json!({"method": "rk4", "dt": dt, "clamp_count": traj.clamp_count});
            Ok((traj, extra))
        }
        KineticMethod::Picard => {
            let n_steps = ((cfg.run.t_end / dt).ceil() as usize).max(1);
            let opts = PicardOptions {
                max_iter: cfg.run.picard_max_iter,
                ..PicardOptions::new(cfg.run.t_end, n_steps)
            };
            let pr = picard_solve(&res.rho0, model, opts)?;
            let step = cfg.run.t_end / n_steps as f64;
            let mut traj = Trajectory {
                times: Vec::new(),
                fields: Vec::new(),
                diagnostics: Vec::new(),
                clamp_count: 0,
            };
            let last = pr.times.len() - 1;
            for (k, (t, f)) in pr.times.iter().zip(pr.fields).enumerate() {
                if k % every == 0 || k == last {
                    traj.diagnostics.push(StepDiagnostics {
                        sup: f.sup(),
                        min: f.min(),
                        dt: step,
                    });
                    traj.times.push(*t);
                    traj.fields.push(f);
                }
            }
            let extra = json!({"method": "picard", "n_steps": n_steps, "iterations": pr.iterations, "residual": pr.residual});
            Ok((traj, extra))
        }
    }
}

fn kinetic(cfg: &ExperimentConfig, res: &Resolved, out: &mut OutputSet) -> Result<Value> {
    let model = res.params.on_grid(&res.domain)?;
    let (traj, extra) = solve_kinetic(cfg, res, &model)?;
    out.csv("trajectory.csv", &trajectory_table(&traj))?;
    let last = traj.last();
    Ok(json!({
        "solver": extra,
        "t_end": cfg.run.t_end,
        "final_sup": last.sup(),
        "final_min": last.min(),
        "final_mean": last.mean(),
        "max_sup": traj.sup_series().into_iter().fold(0.0, f64::max),
        "carrying_capacity": model.carrying_capacity(),
    }))
}

fn initial_chain(cfg: &ExperimentConfig, res: &Resolved) -> Result<CorrelationChain> {
    product_state(&res.rho0)?
        .with_closure(cfg.hierarchy.closure)
        .with_order(cfg.hierarchy.order)
}

fn hierarchy(cfg: &ExperimentConfig, res: &Resolved, out: &mut OutputSet) -> Result<Value> {
    let h = &cfg.hierarchy;
    let model = res.params.on_grid(&res.domain)?;
    let chain0 = initial_chain(cfg, res)?;
    let dt = step_size(cfg, &model, &res.rho0);
    let opts = ChainOptions::new(cfg.run.t_end, dt).every(cfg.run.output_every.unwrap_or(1));
    let traj = evolve_chain(&chain0, &model, h.epsilon, opts)?;

    let mut k1 = CsvTable::new(&["t", "x_index", "k1"]);
    let mut diag = CsvTable::new(&["t", "chaos_residual", "norm"]);
    for ((t, c), r) in traj
        .times
        .iter()
        .zip(&traj.chains)
        .zip(&traj.chaos_residuals)
    {
        for (i, v) in c.k1().iter().enumerate() {
            k1.push(vec![(*t).into(), i.into(), (*v).into()]);
        }
        diag.push(vec![
            (*t).into(),
            (*r).into(),
            sub_poissonian_norm(c, h.alpha).into(),
        ]);
    }
    out.csv("chain_k1.csv", &k1)?;
    out.csv("chain_diagnostics.csv", &diag)?;
    let last = traj.last();
    let t_last = *traj.times.last().expect("initial time stored");
    let n = last.points();
    let mut k2 = CsvTable::new(&["t", "x_index_0", "x_index_1", "k2"]);
    for i in 0..n {
        for j in 0..n {
            k2.push(vec![
                t_last.into(),
                i.into(),
                j.into(),
                last.k2_at(i, j).into(),
            ]);
        }
    }
    out.csv("chain_k2_final.csv", &k2)?;
    Ok(json!({
        "epsilon": h.epsilon,
        "order": h.order,
        "closure": h.closure,
        "dt": dt,
        "initial_norm": NormScale::measure(&chain0, h.alpha, h.alpha_star),
        "final_norm": NormScale::measure(last, h.alpha, h.alpha_star),
        "final_chaos_residual": traj.chaos_residuals.last(),
        "max_asymmetry": traj.max_asymmetry,
    }))
}

fn sweep(cfg: &ExperimentConfig, res: &Resolved, out: &mut OutputSet) -> Result<Value> {
    let h = &cfg.hierarchy;
    let model = res.params.on_grid(&res.domain)?;
    let chain0 = initial_chain(cfg, res)?;
    let dt = step_size(cfg, &model, &res.rho0);
    let opts = SweepOptions {
        output_every: cfg.run.output_every.unwrap_or(1),
        ..SweepOptions::new(cfg.run.t_end, dt, h.alpha, h.alpha_star)
    };
    let report = epsilon_sweep(&chain0, &model, &cfg.sweep.epsilons, opts)?;
    let mut table = CsvTable::new(&["epsilon", "distance", "reference_bound"]);
    for ((e, d), b) in report
        .epsilons
        .iter()
        .zip(&report.distances)
        .zip(&report.reference_bounds)
    {
        table.push(vec![(*e).into(), (*d).into(), (*b).into()]);
    }
    out.csv("epsilon_sweep.csv", &table)?;
    out.json("epsilon_report.json", &report)?;
    Ok(json!({
        "fitted_order": report.fitted_order,
        "time_horizon": report.time_horizon,
        "beyond_horizon": report.beyond_horizon,
        "dt": dt,
    }))
}

/// One row of the micro/kinetic comparison.
#[derive(Debug, Clone, Serialize)]
pub struct VlasovRow {
    pub t: f64,
    pub epsilon: f64,
    /// `eps` times the ensemble-mean particle density.
    pub eps_times_micro_density: f64,
    pub stderr: f64,
    /// Spatial mean of the kinetic solution.
    pub kinetic_density: f64,
    pub abs_error: f64,
    pub n_runs: usize,
}

/// Rescaled ensembles from `Poisson(rho0 / eps)` against the kinetic solution from `rho0`.
pub fn compare_vlasov(cfg: &ExperimentConfig, res: &Resolved) -> Result<Vec<VlasovRow>> {
    let times = cfg
        .vlasov
        .times
        .clone()
        .unwrap_or_else(|| cfg.snapshot_times());
    let model = res.params.on_grid(&res.domain)?;
    let dt = step_size(cfg, &model, &res.rho0);
    let mut kinetic_means = Vec::with_capacity(times.len());
    let mut rho = res.rho0.clone();
    let mut t_prev = 0.0;
    for &t in &times {
        if t > t_prev {
            let n = ((t - t_prev) / dt).ceil().max(1.0);
            rho = integrate(
                &rho,
                &model,
                IntegrateOptions::new(t - t_prev, (t - t_prev) / n).every(usize::MAX),
            )?
            .last()
            .clone();
            t_prev = t;
        }
        kinetic_means.push(rho.mean());
    }

    let base = crate::model::ModelParams::new(
        res.params.mortality,
        res.params.a_plus.clone(),
        res.params.a_minus.clone(),
    )?;
    let mut rows = Vec::new();
    for (k, &eps) in cfg.vlasov.epsilons.iter().enumerate() {
        let params = base.clone().rescaled(eps)?;
        let scaled: Vec<f64> = res.rho0.values().iter().map(|v| v / eps).collect();
        let rho0 = DensityField::new(res.domain.clone(), scaled)?;
        let mut opts = ensemble_options(cfg, times.clone());
        opts.seed = cfg.run.seed.wrapping_add(k as u64 * 0x9E37_79B9);
        let ens = run_ensemble(&params, &rho0, &opts)?;
        for (est, &kin) in ens.estimates.iter().zip(&kinetic_means) {
            let micro = eps * est.density;
            rows.push(VlasovRow {
                t: est.t,
                epsilon: eps,
                eps_times_micro_density: micro,
                stderr: eps * est.density_stderr,
                kinetic_density: kin,
                abs_error: (micro - kin).abs(),
                n_runs: est.n_runs,
            });
        }
    }
    Ok(rows)
}

fn vlasov(cfg: &ExperimentConfig, res: &Resolved, out: &mut OutputSet) -> Result<Value> {
    let rows = compare_vlasov(cfg, res)?;
    let mut table = CsvTable::new(&[
        "t",
        "epsilon",
        "eps_times_micro_density",
        "kinetic_density",
        "abs_error",
    ]);
    for r in &rows {
        table.push(vec![
            r.t.into(),
            r.epsilon.into(),
            r.eps_times_micro_density.into(),
            r.kinetic_density.into(),
            r.abs_error.into(),
        ]);
    }
    out.csv("vlasov_compare.csv", &table)?;
    Ok(json!({"rows": rows}))
}

fn certify(cfg: &ExperimentConfig, res: &Resolved, out: &mut OutputSet) -> Result<(Value, bool)> {
    let c = &cfg.certify;
    let model = res.params.on_grid(&res.domain)?;
    let (traj, extra) = solve_kinetic(cfg, res, &model)?;
    let path = out.csv("trajectory.csv", &trajectory_table(&traj))?;
    let observed = traj.sup_series().into_iter().fold(0.0, f64::max);

    let mut certs: Vec<TheoremCertificate> = Vec::new();
    if let Some(theta) = c.theta {
        certs.push(verify_bound_on_trajectory(
            &traj,
            &certify_domination(&model, theta)?,
            c.delta,
        )?);
        certs.push(verify_bound_on_trajectory(
            &traj,
            &certify_global_bound(&res.params, &model, theta)?,
            c.delta,
        )?);
    }
    let mut fr = certify_globally(&res.params, &model)?;
    fr.observed_sup = Some(observed);
    certs.push(fr);
    if let (Some(km), Some(kp)) = (c.kappa_minus, c.kappa_plus) {
        certs.push(k4_sandwich(&traj, &model, km, kp)?);
    }
    for cert in &mut certs {
        cert.attach_trajectory(&path)?;
        if let Err(e) = cert.ensure_sound() {
            log::error!("{e}");
        }
    }
    out.json("certificates.json", &certs)?;
    let violated = certs.iter().any(|c| c.ensure_sound().is_err());
    let verdicts: Vec<Value> = certs
        .iter()
        .map(|c| json!({"theorem": c.theorem, "verdict": c.verdict, "conclusion": c.conclusion}))
        .collect();
    Ok((
        json!({"solver": extra, "observed_sup": observed, "certificates": verdicts}),
        violated,
    ))
}
