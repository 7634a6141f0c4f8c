//! Exact event-driven simulation (Gillespie's direct method).

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::config::{torus_distance, wrap, ParticleConfiguration};
use super::sampler::RadialSampler;
use super::sumtree::SumTree;
use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, TorusDomain};
use crate::model::ModelParams;

/// Uniform grid of buckets with edge at least the interaction range.
#[derive(Debug, Clone)]
pub(crate) struct CellList {
    dim: usize,
    per_axis: usize,
    cell_edge: f64,
    cells: Vec<Vec<usize>>,
}

impl CellList {
    pub(crate) fn new(dim: usize, edge: f64, range: f64) -> Self {
        let mut per_axis = if range > 0.0 {
            (edge / range).floor() as usize
        } else {
            1
        };
        let limit = if dim == 1 { 1 << 16 } else { 1 << 9 };
        per_axis = per_axis.min(limit);
        if per_axis < 3 {
            per_axis = 1;
        }
        Self {
            dim,
            per_axis,
            cell_edge: edge / per_axis as f64,
            cells: vec![Vec::new(); per_axis.pow(dim as u32)],
        }
    }

    pub(crate) fn cell_of(&self, p: &[f64; 2]) -> usize {
        let axis = |v: f64| ((v / self.cell_edge) as usize).min(self.per_axis - 1);
        if self.dim == 1 {
            axis(p[0])
        } else {
            axis(p[0]) * self.per_axis + axis(p[1])
        }
    }

    /// Cells whose union contains every point within `range` of cell `c`.
    pub(crate) fn neighbourhood(&self, c: usize, out: &mut Vec<usize>) {
        out.clear();
        let n = self.per_axis;
        if n == 1 {
            out.push(0);
            return;
        }
        let wrap_axis = |i: usize, d: i64| ((i as i64 + d).rem_euclid(n as i64)) as usize;
        if self.dim == 1 {
            for d in -1..=1 {
                out.push(wrap_axis(c, d));
            }
        } else {
            let (i, j) = (c / n, c % n);
            for di in -1..=1 {
                for dj in -1..=1 {
                    out.push(wrap_axis(i, di) * n + wrap_axis(j, dj));
                }
            }
        }
    }

    pub(crate) fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub(crate) fn members(&self, c: usize) -> &[usize] {
        &self.cells[c]
    }

    /// Insert particle `id`; returns its slot within the cell.
    fn insert(&mut self, c: usize, id: usize) -> usize {
        self.cells[c].push(id);
        self.cells[c].len() - 1
    }

    /// Remove the entry at `slot`; returns the id moved into that slot, if any.
    fn remove(&mut self, c: usize, slot: usize) -> Option<usize> {
        let cell = &mut self.cells[c];
        cell.swap_remove(slot);
        cell.get(slot).copied()
    }

    fn rename(&mut self, c: usize, slot: usize, id: usize) {
        self.cells[c][slot] = id;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Birth,
    Death,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub dt: f64,
    pub kind: EventKind,
    pub population: usize,
}

/// Competition kernel as seen by particles: `eps_eff * a-`, cut at its range.
#[derive(Debug, Clone)]
struct Competition {
    kernel: KernelSpec,
    range: f64,
}

impl Competition {
    fn pair(&self, r: f64) -> f64 {
        if r <= self.range {
            self.kernel.radial(r)
        } else {
            0.0
        }
    }
}

fn competition(params: &ModelParams, dom: &TorusDomain) -> Result<Option<Competition>> {
    if params.a_minus.is_zero() {
        return Ok(None);
    }
    let kernel = params.a_minus.scaled(params.effective_epsilon())?;
    let range = kernel.cutoff_radius();
    if 2.0 * range > dom.edge() {
        return Err(Error::PeriodizationOverlap {
            radius: range,
            edge: dom.edge(),
        });
    }
    Ok(Some(Competition { kernel, range }))
}

/// From-scratch death rates of every particle and the total birth rate.
pub fn event_rates(cfg: &ParticleConfiguration, params: &ModelParams) -> Result<(Vec<f64>, f64)> {
    let dom = TorusDomain::new(cfg.dim, cfg.edge, 2)?;
    let comp = competition(params, &dom)?;
    let n = cfg.len();
    let mut death = vec![params.mortality; n];
    if let Some(c) = &comp {
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    death[i] += c.pair(cfg.distance(i, j));
                }
            }
        }
    }
    Ok((death, n as f64 * params.a_plus.stats().mass))
}

/// Mutable simulation state for one run.
#[derive(Debug, Clone)]
pub struct Simulation {
    dim: usize,
    edge: f64,
    mortality: f64,
    birth_mass: f64,
    competition: Option<Competition>,
    sampler: RadialSampler,
    positions: Vec<[f64; 2]>,
    cell: Vec<usize>,
    slot: Vec<usize>,
    rates: SumTree,
    cells: CellList,
    scratch: Vec<usize>,
    time: f64,
    events: u64,
    births: u64,
    deaths: u64,
}

impl Simulation {
    pub fn new(
        params: &ModelParams,
        dom: &TorusDomain,
        cfg: &ParticleConfiguration,
    ) -> Result<Self> {
        params.validate()?;
        if params.dim() != dom.dim() || cfg.dim != dom.dim() || cfg.edge != dom.edge() {
            return Err(Error::DomainMismatch(
                "configuration, kernels and domain disagree".into(),
            ));
        }
        let comp = competition(params, dom)?;
        let range = comp.as_ref().map_or(0.0, |c| c.range);
        let mut sim = Self {
            dim: dom.dim(),
            edge: dom.edge(),
            mortality: params.mortality,
            birth_mass: params.a_plus.stats().mass,
            competition: comp,
            sampler: RadialSampler::new(&params.a_plus),
            positions: Vec::with_capacity(cfg.len()),
            cell: Vec::with_capacity(cfg.len()),
            slot: Vec::with_capacity(cfg.len()),
            rates: SumTree::with_capacity(cfg.len()),
            cells: CellList::new(dom.dim(), dom.edge(), range),
            scratch: Vec::with_capacity(9),
            time: 0.0,
            events: 0,
            births: 0,
            deaths: 0,
        };
        for p in &cfg.positions {
            sim.insert(*p);
        }
        Ok(sim)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn population(&self) -> usize {
        self.positions.len()
    }

    pub fn births(&self) -> u64 {
        self.births
    }

    pub fn deaths(&self) -> u64 {
        self.deaths
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    pub fn configuration(&self) -> ParticleConfiguration {
        ParticleConfiguration {
            dim: self.dim,
            edge: self.edge,
            positions: self.positions.clone(),
            generation: self.events,
        }
    }

    pub fn death_rate(&self, i: usize) -> f64 {
        self.rates.get(i)
    }

    pub fn total_death_rate(&self) -> f64 {
        self.rates.total()
    }

    pub fn total_birth_rate(&self) -> f64 {
        self.population() as f64 * self.birth_mass
    }

    pub fn total_rate(&self) -> f64 {
        self.total_death_rate() + self.total_birth_rate()
    }

    /// Visit every other particle within the competition range of `p`.
    fn for_neighbours(
        &mut self,
        p: &[f64; 2],
        skip: Option<usize>,
        mut f: impl FnMut(&mut SumTree, usize, f64),
    ) {
        let Some(comp) = &self.competition else {
            return;
        };
        let c = self.cells.cell_of(p);
        self.cells.neighbourhood(c, &mut self.scratch);
        for &nc in &self.scratch {
            for &j in self.cells.members(nc) {
                if Some(j) == skip {
                    continue;
                }
                let v = comp.pair(torus_distance(p, &self.positions[j], self.dim, self.edge));
                if v > 0.0 {
                    f(&mut self.rates, j, v);
                }
            }
        }
    }

    fn insert(&mut self, p: [f64; 2]) {
        let mut own = self.mortality;
        self.for_neighbours(&p, None, |tree, j, v| {
            tree.add(j, v);
            own += v;
        });
        let id = self.positions.len();
        let c = self.cells.cell_of(&p);
        let s = self.cells.insert(c, id);
        self.positions.push(p);
        self.cell.push(c);
        self.slot.push(s);
        self.rates.push(own);
    }

    fn remove(&mut self, i: usize) {
        let p = self.positions[i];
        self.for_neighbours(&p, Some(i), |tree, j, v| tree.add(j, -v));

        if let Some(moved) = self.cells.remove(self.cell[i], self.slot[i]) {
            self.slot[moved] = self.slot[i];
        }
        let last = self.positions.len() - 1;
        if i != last {
            self.cells.rename(self.cell[last], self.slot[last], i);
        }
        self.positions.swap_remove(i);
        self.cell.swap_remove(i);
        self.slot.swap_remove(i);
        self.rates.swap_remove(i);
    }

    /// Waiting time to the next event, or `Absorbing` if nothing can happen.
    pub fn draw_wait<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let total = self.total_rate();
        if total <= 0.0 || self.population() == 0 {
            return Err(Error::Absorbing);
        }
        let e: f64 = Exp1.sample(rng);
        Ok(e / total)
    }

    /// Apply one event after a waiting time `dt` drawn by [`Self::draw_wait`].
    pub fn fire<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) -> Result<Event> {
        let deaths = self.total_death_rate();
        let total = deaths + self.total_birth_rate();
        if total <= 0.0 || self.population() == 0 {
            return Err(Error::Absorbing);
        }
        let u = rng.random::<f64>() * total;
        let kind = if u < deaths {
            let i = self.rates.find(u);
            self.remove(i);
            self.deaths += 1;
            EventKind::Death
        } else {
            let parent = rng.random_range(0..self.population());
            let d = self.sampler.sample(rng);
            let x = self.positions[parent];
            let child = [
                wrap(x[0] + d[0], self.edge),
                if self.dim == 2 {
                    wrap(x[1] + d[1], self.edge)
                } else {
                    0.0
                },
            ];
            self.insert(child);
            self.births += 1;
            EventKind::Birth
        };
        self.time += dt;
        self.events += 1;
        Ok(Event {
            dt,
            kind,
            population: self.population(),
        })
    }

    /// One Gillespie step: exponential waiting time, then a death chosen in
    /// proportion to its rate or a birth from a uniformly chosen parent.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Event> {
        let dt = self.draw_wait(rng)?;
        self.fire(dt, rng)
    }

    /// Largest relative gap between maintained and recomputed death rates.
    pub fn rate_discrepancy(&self) -> f64 {
        let n = self.population();
        let mut worst = 0.0f64;
        for i in 0..n {
            let mut r = self.mortality;
            if let Some(comp) = &self.competition {
                for j in 0..n {
                    if j != i {
                        r += comp.pair(torus_distance(
                            &self.positions[i],
                            &self.positions[j],
                            self.dim,
                            self.edge,
                        ));
                    }
                }
            }
            let got = self.rates.get(i);
            worst = worst.max((got - r).abs() / r.abs().max(1e-300));
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::particle_sim::init_poisson_constant;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dom1() -> TorusDomain {
        TorusDomain::new(1, 10.0, 32).unwrap()
    }

    #[test]
    fn two_point_rates() {
        let dom = dom1();
        let p = ModelParams::new(
            0.7,
            KernelSpec::ball(1.0, 1.0, 1).unwrap(),
            KernelSpec::ball(0.3, 1.0, 1).unwrap(),
        )
        .unwrap();
        let cfg = ParticleConfiguration::new(&dom, vec![[1.0, 0.0], [1.5, 0.0]]).unwrap();
        let (d, b) = event_rates(&cfg, &p).unwrap();
        assert!((d.iter().sum::<f64>() - (2.0 * 0.7 + 2.0 * 0.3)).abs() < 1e-14);
        assert!((b - 2.0 * 2.0).abs() < 1e-14);
        let sim = Simulation::new(&p, &dom, &cfg).unwrap();
        assert!((sim.total_death_rate() - 2.0).abs() < 1e-14);

        let far =
            ParticleConfiguration::new(&dom, vec![[1.0, 0.0], [4.0, 0.0], [7.0, 0.0]]).unwrap();
        let (d, _) = event_rates(&far, &p).unwrap();
        assert_eq!(d.iter().sum::<f64>(), 3.0 * 0.7);
    }

    #[test]
    fn minimum_image_competition() {
        let dom = dom1();
        let p = ModelParams::new(
            0.0,
            KernelSpec::zero(1).unwrap(),
            KernelSpec::ball(1.0, 1.0, 1).unwrap(),
        )
        .unwrap();
        let cfg = ParticleConfiguration::new(&dom, vec![[0.2, 0.0], [9.7, 0.0]]).unwrap();
        let sim = Simulation::new(&p, &dom, &cfg).unwrap();
        assert_eq!(sim.death_rate(0), 1.0);
    }

    #[test]
    fn empty_is_absorbing() {
        let dom = dom1();
        let p = ModelParams::new(
            1.0,
            KernelSpec::ball(1.0, 1.0, 1).unwrap(),
            KernelSpec::zero(1).unwrap(),
        )
        .unwrap();
        let mut sim = Simulation::new(&p, &dom, &ParticleConfiguration::empty(1, 10.0)).unwrap();
        assert_eq!(sim.total_rate(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(sim.step(&mut rng), Err(Error::Absorbing)));
    }

    #[test]
    fn pure_death_and_pure_birth_are_monotone() {
        let dom = TorusDomain::new(2, 8.0, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = init_poisson_constant(&dom, 1.0, &mut rng).unwrap();

        let death = ModelParams::new(
            1.0,
            KernelSpec::zero(2).unwrap(),
            KernelSpec::ball(0.5, 1.0, 2).unwrap(),
        )
        .unwrap();
        let mut sim = Simulation::new(&death, &dom, &cfg).unwrap();
        let mut last = sim.population();
        while let Ok(ev) = sim.step(&mut rng) {
            assert_eq!(ev.population + 1, last);
            last = ev.population;
        }
        assert_eq!(sim.population(), 0);

        let birth = ModelParams::new(
            0.0,
            KernelSpec::ball(1.0, 1.0, 2).unwrap(),
            KernelSpec::zero(2).unwrap(),
        )
        .unwrap();
        let mut sim = Simulation::new(&birth, &dom, &cfg).unwrap();
        for _ in 0..500 {
            let before = sim.population();
            let ev = sim.step(&mut rng).unwrap();
            assert_eq!(ev.population, before + 1);
        }
    }

    #[test]
    fn single_particle_birth_fraction() {
        let dom = dom1();
        let p = ModelParams::new(
            1.0,
            KernelSpec::gaussian_with_mass(1.0, 0.5, 1).unwrap(),
            KernelSpec::zero(1).unwrap(),
        )
        .unwrap();
        let cfg = ParticleConfiguration::new(&dom, vec![[5.0, 0.0]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let trials = 10_000;
        let mut births = 0;
        for _ in 0..trials {
            let mut sim = Simulation::new(&p, &dom, &cfg).unwrap();
            if sim.step(&mut rng).unwrap().kind == EventKind::Birth {
                births += 1;
            }
        }
        let frac = births as f64 / trials as f64;
        assert!(
            (frac - 0.5).abs() < 3.0 * (0.25 / trials as f64).sqrt(),
            "{frac}"
        );
    }

    #[test]
    fn incremental_rates_match_recomputation() {
        for dim in [1, 2] {
            let dom = TorusDomain::new(dim, 12.0, 8).unwrap();
            let p = ModelParams::new(
                0.4,
                KernelSpec::gaussian_with_mass(1.2, 0.8, dim).unwrap(),
                KernelSpec::gaussian(0.3, 0.6, dim).unwrap(),
            )
            .unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let cfg = init_poisson_constant(&dom, 1.0, &mut rng).unwrap();
            let mut sim = Simulation::new(&p, &dom, &cfg).unwrap();
            let n0 = sim.population() as i64;
            for k in 0..3000 {
                if sim.step(&mut rng).is_err() {
                    break;
                }
                if k % 250 == 0 {
                    assert!(sim.rate_discrepancy() < 1e-9);
                }
            }
            assert!(sim.rate_discrepancy() < 1e-9);
            assert_eq!(
                sim.population() as i64,
                n0 + sim.births() as i64 - sim.deaths() as i64
            );
            let (d, b) = event_rates(&sim.configuration(), &p).unwrap();
            let mine: f64 = (0..sim.population()).map(|i| sim.death_rate(i)).sum();
            assert!((mine - d.iter().sum::<f64>()).abs() < 1e-9 * mine);
            assert!((b - sim.total_birth_rate()).abs() < 1e-12 * b);
        }
    }

    #[test]
    fn rescaled_competition_uses_epsilon() {
        let dom = dom1();
        let p = ModelParams::new(
            0.0,
            KernelSpec::zero(1).unwrap(),
            KernelSpec::ball(2.0, 1.0, 1).unwrap(),
        )
        .unwrap()
        .rescaled(0.25)
        .unwrap();
        let cfg = ParticleConfiguration::new(&dom, vec![[1.0, 0.0], [1.5, 0.0]]).unwrap();
        let (d, _) = event_rates(&cfg, &p).unwrap();
        assert_eq!(d, vec![0.5, 0.5]);
    }

    #[test]
    fn overlong_range_rejected() {
        let dom = TorusDomain::new(1, 4.0, 8).unwrap();
        let p = ModelParams::new(
            1.0,
            KernelSpec::zero(1).unwrap(),
            KernelSpec::gaussian(1.0, 1.0, 1).unwrap(),
        )
        .unwrap();
        assert!(Simulation::new(&p, &dom, &ParticleConfiguration::empty(1, 4.0)).is_err());
    }
}
