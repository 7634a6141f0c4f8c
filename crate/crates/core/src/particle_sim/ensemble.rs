//! Independent runs in parallel and moment estimators over the ensemble.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{init_poisson, torus_distance};
use super::engine::{CellList, Simulation};
use super::ParticleConfiguration;
use crate::error::{Error, Result};
use crate::kernels::TorusDomain;
use crate::kinetic::DensityField;
use crate::model::ModelParams;

/// Generator for run `run` of an ensemble seeded with `seed`.
pub fn run_rng(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleOptions {
    pub t_end: f64,
    pub n_runs: usize,
    pub snapshot_times: Vec<f64>,
    pub seed: u64,
    pub population_cap: usize,
    pub pair_bins: usize,
    /// Largest pair distance histogrammed; must not exceed half the edge.
    pub pair_r_max: f64,
    pub record_events: bool,
    pub keep_configurations: bool,
    /// Compare maintained death rates with a recomputation every this many events.
    pub check_rates_every: Option<u64>,
}

impl EnsembleOptions {
    pub fn new(t_end: f64, n_runs: usize, seed: u64) -> Self {
        Self {
            t_end,
            n_runs,
            snapshot_times: vec![t_end],
            seed,
            population_cap: 1_000_000,
            pair_bins: 20,
            pair_r_max: 1.0,
            record_events: false,
            keep_configurations: false,
            check_rates_every: None,
        }
    }

    fn validate(&self, dom: &TorusDomain) -> Result<()> {
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::param("run.t_end", "must be finite and >= 0"));
        }
        if self.n_runs == 0 {
            return Err(Error::param("run.runs", "need at least one run"));
        }
        if self.snapshot_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param(
                "run.snapshot_times",
                "must be strictly increasing",
            ));
        }
        if self
            .snapshot_times
            .iter()
            .any(|&t| !(0.0..=self.t_end).contains(&t))
        {
            return Err(Error::param("run.snapshot_times", "must lie in [0, t_end]"));
        }
        if self.pair_bins == 0 || !(self.pair_r_max > 0.0 && 2.0 * self.pair_r_max <= dom.edge()) {
            return Err(Error::param(
                "run.pair_r_max",
                "need r_max in (0, L/2] and at least one bin",
            ));
        }
        Ok(())
    }

    fn bin_width(&self) -> f64 {
        self.pair_r_max / self.pair_bins as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    Extinct { time: f64 },
    BlowUp { time: f64, population: usize },
}

/// Per-run record.
#[derive(Debug, Clone, Serialize)]
pub struct EventTrace {
    pub run: usize,
    pub seed: u64,
    /// `(t, population)` at the snapshot times that were reached.
    pub samples: Vec<(f64, usize)>,
    /// `(t, population)` after every event, when requested.
    pub events: Option<Vec<(f64, usize)>>,
    pub initial_population: usize,
    pub births: u64,
    pub deaths: u64,
    pub status: RunStatus,
    pub max_rate_discrepancy: Option<f64>,
    #[serde(skip)]
    pub configurations: Option<Vec<ParticleConfiguration>>,
}

/// Ensemble estimates at one snapshot time.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationEstimate {
    pub t: f64,
    /// Runs contributing (blown-up runs are excluded from the time they blow up).
    pub n_runs: usize,
    pub n_blown_up: usize,
    pub k1_hat: DensityField,
    pub density: f64,
    pub density_stderr: f64,
    pub r_bin_centers: Vec<f64>,
    pub k2_hat: Vec<f64>,
    pub k2_stderr: Vec<f64>,
}

impl CorrelationEstimate {
    /// `k2_hat / density^2` per bin.
    pub fn normalized_pair(&self) -> Vec<f64> {
        let d2 = self.density * self.density;
        self.k2_hat
            .iter()
            .map(|k| if d2 > 0.0 { k / d2 } else { f64::NAN })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleResult {
    pub traces: Vec<EventTrace>,
    pub estimates: Vec<CorrelationEstimate>,
}

impl EnsembleResult {
    /// Mean population at each snapshot over non-blown-up runs.
    pub fn mean_population(&self) -> Vec<f64> {
        self.estimates
            .iter()
            .map(|e| e.density * e.k1_hat.domain().volume())
            .collect()
    }

    pub fn blow_ups(&self) -> usize {
        self.traces
            .iter()
            .filter(|t| matches!(t.status, RunStatus::BlowUp { .. }))
            .count()
    }
}

struct Snapshot {
    counts: Vec<u32>,
    pairs: Vec<u64>,
    population: usize,
}

fn pair_histogram(positions: &[[f64; 2]], dom: &TorusDomain, opts: &EnsembleOptions) -> Vec<u64> {
    let (d, l) = (dom.dim(), dom.edge());
    let width = opts.bin_width();
    let mut hist = vec![0u64; opts.pair_bins];
    let mut bucket = |r: f64| {
        if r < opts.pair_r_max {
            let b = ((r / width) as usize).min(opts.pair_bins - 1);
            hist[b] += 2;
        }
    };
    let cells = CellList::new(d, l, opts.pair_r_max);
    let mut grid: Vec<Vec<usize>> = vec![Vec::new(); cells.n_cells()];
    let mut neigh = Vec::new();
    for (i, p) in positions.iter().enumerate() {
        grid[cells.cell_of(p)].push(i);
    }
    for (c, members) in grid.iter().enumerate() {
        cells.neighbourhood(c, &mut neigh);
        neigh.sort_unstable();
        neigh.dedup();
        for &i in members {
            for &nc in &neigh {
                for &j in &grid[nc] {
                    if j > i {
                        bucket(torus_distance(&positions[i], &positions[j], d, l));
                    }
                }
            }
        }
    }
    hist
}

fn snapshot(positions: &[[f64; 2]], dom: &TorusDomain, opts: &EnsembleOptions) -> Snapshot {
    let mut counts = vec![0u32; dom.len()];
    for p in positions {
        counts[dom.nearest_index(p)] += 1;
    }
    Snapshot {
        counts,
        pairs: pair_histogram(positions, dom, opts),
        population: positions.len(),
    }
}

struct RunOutput {
    trace: EventTrace,
    snapshots: Vec<Snapshot>,
}

fn run_one(
    params: &ModelParams,
    rho0: &DensityField,
    opts: &EnsembleOptions,
    run: usize,
) -> Result<RunOutput> {
    let dom = rho0.domain();
    let mut rng = run_rng(opts.seed, run);
    let cfg0 = init_poisson(rho0, &mut rng)?;
    let mut sim = Simulation::new(params, dom, &cfg0)?;
    let mut trace = EventTrace {
        run,
        seed: opts.seed,
        samples: Vec::with_capacity(opts.snapshot_times.len()),
        events: opts.record_events.then(Vec::new),
        initial_population: cfg0.len(),
        births: 0,
        deaths: 0,
        status: RunStatus::Completed,
        max_rate_discrepancy: opts.check_rates_every.map(|_| 0.0),
        configurations: opts.keep_configurations.then(Vec::new),
    };
    let mut snaps = Vec::with_capacity(opts.snapshot_times.len());
    let mut next = 0;
    let record = |t: f64, sim: &Simulation, trace: &mut EventTrace, snaps: &mut Vec<Snapshot>| {
        trace.samples.push((t, sim.population()));
        snaps.push(snapshot(sim.positions(), dom, opts));
        if let Some(c) = trace.configurations.as_mut() {
            c.push(sim.configuration());
        }
    };

    loop {
        let wait = match sim.draw_wait(&mut rng) {
            Ok(w) => w,
            Err(Error::Absorbing) => {
                if sim.population() == 0 {
                    trace.status = RunStatus::Extinct { time: sim.time() };
                }
                while next < opts.snapshot_times.len() {
                    record(opts.snapshot_times[next], &sim, &mut trace, &mut snaps);
                    next += 1;
                }
                break;
            }
            Err(e) => return Err(e),
        };
        let t_next = sim.time() + wait;
        while next < opts.snapshot_times.len() && opts.snapshot_times[next] < t_next {
            record(opts.snapshot_times[next], &sim, &mut trace, &mut snaps);
            next += 1;
        }
        if t_next > opts.t_end {
            break;
        }
        let ev = sim.fire(wait, &mut rng)?;
        if let Some(log) = trace.events.as_mut() {
            log.push((sim.time(), ev.population));
        }
        if let Some(k) = opts.check_rates_every {
            if sim.events() % k == 0 {
                let d = sim.rate_discrepancy();
                trace.max_rate_discrepancy = trace.max_rate_discrepancy.map(|m| m.max(d));
            }
        }
        if ev.population > opts.population_cap {
            trace.status = RunStatus::BlowUp {
                time: sim.time(),
                population: ev.population,
            };
            log::warn!(
                "run {run} exceeded the population cap {} at t = {}",
                opts.population_cap,
                sim.time()
            );
            break;
        }
    }
    trace.births = sim.births();
    trace.deaths = sim.deaths();
    Ok(RunOutput {
        trace,
        snapshots: snaps,
    })
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn shell_volume(dim: usize, r0: f64, r1: f64) -> f64 {
    if dim == 1 {
        2.0 * (r1 - r0)
    } else {
        std::f64::consts::PI * (r1 * r1 - r0 * r0)
    }
}

/// Run `opts.n_runs` independent simulations from Poisson(`rho0`) starts.
///
/// Runs are distributed over the rayon pool and reduced in run order, so
/// the result does not depend on the number of worker threads.
pub fn run_ensemble(
    params: &ModelParams,
    rho0: &DensityField,
    opts: &EnsembleOptions,
) -> Result<EnsembleResult> {
    let dom = rho0.domain();
    opts.validate(dom)?;
    params.validate()?;
    let outputs = (0..opts.n_runs)
        .into_par_iter()
        .map(|run| run_one(params, rho0, opts, run))
        .collect::<Result<Vec<_>>>()?;

    let vol = dom.volume();
    let cell = dom.cell_volume();
    let width = opts.bin_width();
    let mut estimates = Vec::with_capacity(opts.snapshot_times.len());
    for (s, &t) in opts.snapshot_times.iter().enumerate() {
        let used: Vec<&Snapshot> = outputs.iter().filter_map(|o| o.snapshots.get(s)).collect();
        let n = used.len();
        let mut k1 = vec![0.0; dom.len()];
        for snap in &used {
            for (acc, &c) in k1.iter_mut().zip(&snap.counts) {
                *acc += c as f64;
            }
        }
        if n > 0 {
            k1.iter_mut().for_each(|v| *v /= n as f64 * cell);
        }
        let dens: Vec<f64> = used.iter().map(|s| s.population as f64 / vol).collect();
        let (density, density_stderr) = mean_stderr(&dens);

        let mut centers = Vec::with_capacity(opts.pair_bins);
        let mut k2 = Vec::with_capacity(opts.pair_bins);
        let mut k2_se = Vec::with_capacity(opts.pair_bins);
        for b in 0..opts.pair_bins {
            let (r0, r1) = (b as f64 * width, (b + 1) as f64 * width);
            let norm = vol * shell_volume(dom.dim(), r0, r1);
            let per_run: Vec<f64> = used.iter().map(|s| s.pairs[b] as f64 / norm).collect();
            let (m, se) = mean_stderr(&per_run);
            centers.push(0.5 * (r0 + r1));
            k2.push(if n > 0 { m } else { 0.0 });
            k2_se.push(if n > 1 { se } else { 0.0 });
        }
        estimates.push(CorrelationEstimate {
            t,
            n_runs: n,
            n_blown_up: opts.n_runs - n,
            k1_hat: DensityField::new(dom.clone(), k1)?,
            density: if n > 0 { density } else { 0.0 },
            density_stderr: if n > 1 { density_stderr } else { 0.0 },
            r_bin_centers: centers,
            k2_hat: k2,
            k2_stderr: k2_se,
        });
    }
    Ok(EnsembleResult {
        traces: outputs.into_iter().map(|o| o.trace).collect(),
        estimates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;

    #[test]
    fn pair_histogram_matches_brute_force() {
        let dom = TorusDomain::new(2, 10.0, 8).unwrap();
        let mut rng = run_rng(4, 0);
        let cfg = super::super::init_poisson_constant(&dom, 2.0, &mut rng).unwrap();
        let mut opts = EnsembleOptions::new(1.0, 1, 0);
        opts.pair_r_max = 2.0;
        opts.pair_bins = 7;
        let fast = pair_histogram(&cfg.positions, &dom, &opts);
        let mut slow = vec![0u64; 7];
        for i in 0..cfg.len() {
            for j in 0..cfg.len() {
                let r = cfg.distance(i, j);
                if i != j && r < 2.0 {
                    slow[((r / opts.bin_width()) as usize).min(6)] += 1;
                }
            }
        }
        assert_eq!(fast, slow);
    }

    #[test]
    fn poisson_pair_density() {
        let dom = TorusDomain::new(1, 20.0, 20).unwrap();
        let p = ModelParams::new(
            1.0,
            KernelSpec::zero(1).unwrap(),
            KernelSpec::zero(1).unwrap(),
        )
        .unwrap();
        let rho = DensityField::constant(dom, 2.0).unwrap();
        let mut opts = EnsembleOptions::new(0.0, 400, 9);
        opts.snapshot_times = vec![0.0];
        opts.pair_bins = 4;
        let res = run_ensemble(&p, &rho, &opts).unwrap();
        let e = &res.estimates[0];
        assert!((e.density - 2.0).abs() < 4.0 * e.density_stderr);
        for (k, se) in e.k2_hat.iter().zip(&e.k2_stderr) {
            assert!((k - 4.0).abs() < 4.0 * se, "{k} +- {se}");
        }
    }

    #[test]
    fn blow_up_is_reported() {
        let dom = TorusDomain::new(1, 10.0, 10).unwrap();
        let p = ModelParams::new(
            0.0,
            KernelSpec::ball(2.0, 1.0, 1).unwrap(),
            KernelSpec::zero(1).unwrap(),
        )
        .unwrap();
        let rho = DensityField::constant(dom, 1.0).unwrap();
        let mut opts = EnsembleOptions::new(10.0, 3, 1);
        opts.population_cap = 200;
        let res = run_ensemble(&p, &rho, &opts).unwrap();
        assert_eq!(res.blow_ups(), 3);
        assert_eq!(res.estimates[0].n_runs, 0);
        assert_eq!(res.estimates[0].n_blown_up, 3);
    }

    #[test]
    fn same_seed_same_result() {
        let dom = TorusDomain::new(1, 10.0, 10).unwrap();
        let p = ModelParams::new(
            1.0,
            KernelSpec::ball(1.5, 1.0, 1).unwrap(),
            KernelSpec::ball(0.2, 0.5, 1).unwrap(),
        )
        .unwrap();
        let rho = DensityField::constant(dom, 1.0).unwrap();
        let mut opts = EnsembleOptions::new(2.0, 4, 77);
        opts.record_events = true;
        let a = run_ensemble(&p, &rho, &opts).unwrap();
        let b = run_ensemble(&p, &rho, &opts).unwrap();
        for (x, y) in a.traces.iter().zip(&b.traces) {
            assert_eq!(x.events, y.events);
        }
        assert_ne!(a.traces[0].events, a.traces[1].events);
    }

    #[test]
    fn event_log_accounting() {
        let dom = TorusDomain::new(1, 10.0, 10).unwrap();
        let p = ModelParams::new(
            1.0,
            KernelSpec::ball(1.2, 1.0, 1).unwrap(),
            KernelSpec::ball(0.3, 0.5, 1).unwrap(),
        )
        .unwrap();
        let rho = DensityField::constant(dom, 1.0).unwrap();
        let mut opts = EnsembleOptions::new(3.0, 2, 5);
        opts.record_events = true;
        opts.check_rates_every = Some(50);
        let res = run_ensemble(&p, &rho, &opts).unwrap();
        for tr in &res.traces {
            let ev = tr.events.as_ref().unwrap();
            let mut prev = (0.0, tr.initial_population);
            for &(t, n) in ev {
                assert!(t > prev.0);
                assert_eq!((n as i64 - prev.1 as i64).abs(), 1);
                prev = (t, n);
            }
            assert_eq!(
                prev.1 as i64,
                tr.initial_population as i64 + tr.births as i64 - tr.deaths as i64
            );
            assert!(tr.max_rate_discrepancy.unwrap() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_options() {
        let dom = TorusDomain::new(1, 10.0, 10).unwrap();
        let p = ModelParams::new(
            1.0,
            KernelSpec::zero(1).unwrap(),
            KernelSpec::zero(1).unwrap(),
        )
        .unwrap();
        let rho = DensityField::constant(dom, 1.0).unwrap();
        let mut opts = EnsembleOptions::new(1.0, 1, 0);
        opts.snapshot_times = vec![0.5, 0.2];
        assert!(run_ensemble(&p, &rho, &opts).is_err());
        opts.snapshot_times = vec![0.5];
        opts.pair_r_max = 6.0;
        assert!(run_ensemble(&p, &rho, &opts).is_err());
    }
}
