use std::sync::{Arc, OnceLock};

use serde::Serialize;

use super::convolve::Spectrum;
use super::{KernelSpec, TorusDomain};
use crate::error::{Error, Result};

/// Relative contribution below which further periodic images are dropped.
const IMAGE_TOLERANCE: f64 = 1e-12;
const MAX_IMAGE_SHELLS: i64 = 64;

/// A kernel periodized onto the torus grid, indexed by displacement.
///
/// `values[k]` is the periodized kernel at the displacement of grid index
/// `k` from the origin; the convolution weight of cell `j` seen from cell
/// `i` is `values[(i - j) mod M] * cell_volume`.
#[derive(Debug, Clone, Serialize)]
pub struct GridKernel {
    domain: TorusDomain,
    values: Vec<f64>,
    discrete_mass: f64,
    #[serde(skip)]
    nonzero: Vec<usize>,
    #[serde(skip)]
    spectrum: OnceLock<Arc<Spectrum>>,
}

impl GridKernel {
    /// Build directly from displacement-indexed values. Values must be
    /// nonnegative and symmetric under index negation.
    pub fn from_values(domain: TorusDomain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::DomainMismatch(format!(
                "kernel has {} values, domain has {} cells",
                values.len(),
                domain.len()
            )));
        }
        for (k, &v) in values.iter().enumerate() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidKernel(format!("grid value {v} at index {k}")));
            }
            if v != values[domain.negate(k)] {
                return Err(Error::InvalidKernel(format!(
                    "grid values not symmetric at index {k}"
                )));
            }
        }
        let discrete_mass = values.iter().sum::<f64>() * domain.cell_volume();
        let nonzero = values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(k, _)| k)
            .collect();
        Ok(Self {
            domain,
            values,
            discrete_mass,
            nonzero,
            spectrum: OnceLock::new(),
        })
    }

    pub fn domain(&self) -> &TorusDomain {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Periodized kernel at displacement index `k`.
    pub fn at(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// Periodized kernel at the displacement `x_i - x_j` between two cells.
    pub fn between(&self, i: usize, j: usize) -> f64 {
        let m = self.domain.points();
        let [i0, i1] = self.domain.unflatten(i);
        let [j0, j1] = self.domain.unflatten(j);
        let k = self.domain.flatten([(i0 + m - j0) % m, (i1 + m - j1) % m]);
        self.values[k]
    }

    /// `sum(values) * cell_volume`.
    pub fn discrete_mass(&self) -> f64 {
        self.discrete_mass
    }

    pub fn supnorm(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.nonzero.is_empty()
    }

    pub(crate) fn nonzero(&self) -> &[usize] {
        &self.nonzero
    }

    pub(crate) fn spectrum(&self) -> Arc<Spectrum> {
        self.spectrum
            .get_or_init(|| Arc::new(Spectrum::new(&self.domain, &self.values)))
            .clone()
    }

    /// Same kernel multiplied by `factor >= 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_values(
            self.domain.clone(),
            self.values.iter().map(|v| v * factor).collect(),
        )
    }
}

/// Sum the periodic images of `k` at every grid displacement of `dom`.
///
/// Refuses compact kernels whose support does not fit in half the torus,
/// since their images would overlap.
pub fn periodize(k: &KernelSpec, dom: &TorusDomain) -> Result<GridKernel> {
    if k.dim() != dom.dim() {
        return Err(Error::DomainMismatch(format!(
            "kernel dimension {} vs domain dimension {}",
            k.dim(),
            dom.dim()
        )));
    }
    let edge = dom.edge();
    let compact = k.support_radius();
    if let Some(radius) = compact {
        if edge < 2.0 * radius {
            return Err(Error::PeriodizationOverlap { radius, edge });
        }
    }
    let shell_limit = match compact {
        Some(r) => ((r / edge).ceil() as i64 + 1).min(MAX_IMAGE_SHELLS),
        None => MAX_IMAGE_SHELLS,
    };

    let m = dom.points();
    let offset = |i: usize| dom.signed_offset(i).unsigned_abs() as f64 * edge / m as f64;
    let image_sum = |x: [f64; 2]| -> f64 {
        let mut total = 0.0;
        for s in 0..=shell_limit {
            let mut ring = 0.0;
            for_each_ring_image(dom.dim(), s, |n0, n1| {
                let y0 = x[0] + n0 as f64 * edge;
                let y1 = x[1] + n1 as f64 * edge;
                ring += k.eval(&[y0, y1]);
            });
            total += ring;
            if compact.is_none() && s >= 1 && ring <= IMAGE_TOLERANCE * total {
                break;
            }
        }
        total
    };

    let values: Vec<f64> = (0..dom.len())
        .map(|flat| {
            let [i, j] = dom.unflatten(flat);
            let x = match dom.dim() {
                1 => [offset(i), 0.0],
                _ => [offset(i), offset(j)],
            };
            image_sum(x)
        })
        .collect();
    GridKernel::from_values(dom.clone(), values)
}

/// Visit integer image shifts on the Chebyshev ring of radius `s`.
fn for_each_ring_image(dim: usize, s: i64, mut f: impl FnMut(i64, i64)) {
    if dim == 1 {
        if s == 0 {
            f(0, 0);
        } else {
            f(s, 0);
            f(-s, 0);
        }
        return;
    }
    if s == 0 {
        f(0, 0);
        return;
    }
    for a in -s..=s {
        for b in -s..=s {
            if a.abs() == s || b.abs() == s {
                f(a, b);
            }
        }
    }
}
