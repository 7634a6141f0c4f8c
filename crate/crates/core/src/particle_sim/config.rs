use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::TorusDomain;
use crate::kinetic::DensityField;

/// Finite point configuration on the torus `[0, L)^d`.
///
/// Points are stored as `[f64; 2]`; the second coordinate is 0 in d = 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParticleConfiguration {
    pub dim: usize,
    pub edge: f64,
    pub positions: Vec<[f64; 2]>,
    /// Number of events since the initial configuration.
    pub generation: u64,
}

/// Reduce a coordinate into `[0, L)`.
pub(crate) fn wrap(v: f64, edge: f64) -> f64 {
    let w = v.rem_euclid(edge);
    if w >= edge {
        0.0
    } else {
        w
    }
}

/// Minimum-image displacement along one axis.
pub(crate) fn min_image(d: f64, edge: f64) -> f64 {
    d - edge * (d / edge).round()
}

impl ParticleConfiguration {
    pub fn empty(dim: usize, edge: f64) -> Self {
        Self {
            dim,
            edge,
            positions: Vec::new(),
            generation: 0,
        }
    }

    pub fn new(dom: &TorusDomain, positions: Vec<[f64; 2]>) -> Result<Self> {
        let (d, l) = (dom.dim(), dom.edge());
        for (i, p) in positions.iter().enumerate() {
            let inside = |v: f64| (0.0..l).contains(&v);
            if !inside(p[0]) || (d == 2 && !inside(p[1])) || (d == 1 && p[1] != 0.0) {
                return Err(Error::param(
                    "configuration",
                    format!("point {i} = {p:?} lies outside [0, {l})^{d}"),
                ));
            }
        }
        Ok(Self {
            dim: d,
            edge: l,
            positions,
            generation: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Torus distance between points `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        torus_distance(&self.positions[i], &self.positions[j], self.dim, self.edge)
    }
}

pub(crate) fn torus_distance(a: &[f64; 2], b: &[f64; 2], dim: usize, edge: f64) -> f64 {
    let dx = min_image(a[0] - b[0], edge);
    if dim == 1 {
        dx.abs()
    } else {
        let dy = min_image(a[1] - b[1], edge);
        (dx * dx + dy * dy).sqrt()
    }
}

/// Poisson configuration with intensity `rho0`.
///
/// Each grid point owns the cell of side `h` centred on it; counts are
/// independent Poisson with mean `rho0 * h^d` and positions uniform in the cell.
pub fn init_poisson<R: Rng + ?Sized>(
    rho0: &DensityField,
    rng: &mut R,
) -> Result<ParticleConfiguration> {
    let dom = rho0.domain();
    let (d, l, h) = (dom.dim(), dom.edge(), dom.spacing());
    let vol = dom.cell_volume();
    let mut positions = Vec::new();
    for (flat, &rho) in rho0.values().iter().enumerate() {
        let mean = rho * vol;
        if mean <= 0.0 {
            continue;
        }
        let n = Poisson::new(mean)
            .map_err(|e| Error::param("initial.density", e.to_string()))?
            .sample(rng) as usize;
        let [i, j] = dom.unflatten(flat);
        let (cx, cy) = (dom.coordinate(i), dom.coordinate(j));
        for _ in 0..n {
            let x = wrap(cx + h * (rng.random::<f64>() - 0.5), l);
            let y = if d == 2 {
                wrap(cy + h * (rng.random::<f64>() - 0.5), l)
            } else {
                0.0
            };
            positions.push([x, y]);
        }
    }
    Ok(ParticleConfiguration {
        dim: d,
        edge: l,
        positions,
        generation: 0,
    })
}

/// Homogeneous Poisson configuration of intensity `c`.
pub fn init_poisson_constant<R: Rng + ?Sized>(
    dom: &TorusDomain,
    c: f64,
    rng: &mut R,
) -> Result<ParticleConfiguration> {
    if !(c.is_finite() && c >= 0.0) {
        return Err(Error::NegativeDensity { index: 0, value: c });
    }
    init_poisson(&DensityField::constant(dom.clone(), c)?, rng)
}
