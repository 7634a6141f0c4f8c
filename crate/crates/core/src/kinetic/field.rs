use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::TorusDomain;

/// Nonnegative density sampled at the grid points of a torus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityField {
    domain: TorusDomain,
    values: Vec<f64>,
}

impl DensityField {
    pub fn new(domain: TorusDomain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::DomainMismatch(format!(
                "field has {} values, domain has {} cells",
                values.len(),
                domain.len()
            )));
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::NegativeDensity { index, value });
        }
        Ok(Self { domain, values })
    }

    pub fn constant(domain: TorusDomain, c: f64) -> Result<Self> {
        let n = domain.len();
        Self::new(domain, vec![c; n])
    }

    /// Sample `f` at every grid point.
    pub fn from_fn(domain: TorusDomain, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = (0..domain.len())
            .map(|flat| {
                let [i, j] = domain.unflatten(flat);
                f([
                    domain.coordinate(i),
                    if domain.dim() == 2 {
                        domain.coordinate(j)
                    } else {
                        0.0
                    },
                ])
            })
            .collect();
        Self::new(domain, values)
    }

    /// Unchecked construction for solver internals and convolution output.
    pub(crate) fn from_raw(domain: TorusDomain, values: Vec<f64>) -> Self {
        Self { domain, values }
    }

    pub fn domain(&self) -> &TorusDomain {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0f64, |s, v| s.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Integral over the torus (midpoint rule).
    pub fn total(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.domain.cell_volume()
    }
}
