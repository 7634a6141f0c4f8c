use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radial profile of an interaction kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum KernelShape {
    /// `amplitude * 1{|x| <= radius}`.
    BallIndicator { amplitude: f64, radius: f64 },
    /// `amplitude * exp(-|x|^2 / (2 sigma^2))`.
    Gaussian { amplitude: f64, sigma: f64 },
    /// Piecewise-linear in `|x|` through `(radii[k], values[k])`, flat below
    /// the first radius and zero beyond the last.
    TabulatedRadial { radii: Vec<f64>, values: Vec<f64> },
}

/// A nonnegative radial kernel on `R^d`, `d` in `{1, 2}`.
///
/// Radial parameterization makes `a(x) = a(-x)` hold exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    shape: KernelShape,
    dim: usize,
}

/// Mass `<a>` and sup-norm `||a||` of a kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelStats {
    pub mass: f64,
    pub supnorm: f64,
}

/// Gaussian tail mass outside the cutoff is below this in both dimensions.
const GAUSSIAN_TAIL_MASS: f64 = 1e-8;

fn check_dim(dim: usize) -> Result<()> {
    if dim == 1 || dim == 2 {
        Ok(())
    } else {
        Err(Error::InvalidKernel(format!(
            "dimension must be 1 or 2, got {dim}"
        )))
    }
}

fn nonneg_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidKernel(format!(
            "{name} must be finite and >= 0, got {v}"
        )))
    }
}

/// Volume of the Euclidean ball of radius `r` in `R^d`.
pub(crate) fn ball_volume(dim: usize, r: f64) -> f64 {
    match dim {
        1 => 2.0 * r,
        _ => PI * r * r,
    }
}

impl KernelSpec {
    pub fn new(shape: KernelShape, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        match &shape {
            KernelShape::BallIndicator { amplitude, radius } => {
                nonneg_finite("amplitude", *amplitude)?;
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidKernel(format!(
                        "radius must be > 0, got {radius}"
                    )));
                }
            }
            KernelShape::Gaussian { amplitude, sigma } => {
                nonneg_finite("amplitude", *amplitude)?;
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return Err(Error::InvalidKernel(format!(
                        "sigma must be > 0, got {sigma}"
                    )));
                }
            }
            KernelShape::TabulatedRadial { radii, values } => {
                if radii.len() != values.len() || radii.len() < 2 {
                    return Err(Error::InvalidKernel(format!(
                        "table needs >= 2 (radius, value) pairs of equal length, got {} radii and {} values",
                        radii.len(),
                        values.len()
                    )));
                }
                for r in radii {
                    nonneg_finite("table radius", *r)?;
                }
                if radii.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidKernel(
                        "table radii must be strictly increasing".into(),
                    ));
                }
                for (k, &v) in values.iter().enumerate() {
                    if !(v.is_finite() && v >= 0.0) {
                        return Err(Error::InvalidKernel(format!(
                            "table value at row {k} is {v}; kernels must be nonnegative"
                        )));
                    }
                }
            }
        }
        Ok(Self { shape, dim })
    }

    pub fn ball(amplitude: f64, radius: f64, dim: usize) -> Result<Self> {
        Self::new(KernelShape::BallIndicator { amplitude, radius }, dim)
    }

    pub fn gaussian(amplitude: f64, sigma: f64, dim: usize) -> Result<Self> {
        Self::new(KernelShape::Gaussian { amplitude, sigma }, dim)
    }

    /// Gaussian scaled so that its mass equals `mass`.
    pub fn gaussian_with_mass(mass: f64, sigma: f64, dim: usize) -> Result<Self> {
        let unit = (sigma * (2.0 * PI).sqrt()).powi(dim as i32);
        Self::gaussian(mass / unit, sigma, dim)
    }

    pub fn tabulated(radii: Vec<f64>, values: Vec<f64>, dim: usize) -> Result<Self> {
        Self::new(KernelShape::TabulatedRadial { radii, values }, dim)
    }

    /// The identically zero kernel.
    pub fn zero(dim: usize) -> Result<Self> {
        Self::ball(0.0, 1.0, dim)
    }

    pub fn shape(&self) -> &KernelShape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Kernel value at distance `r >= 0` from the origin.
    pub fn radial(&self, r: f64) -> f64 {
        match &self.shape {
            KernelShape::BallIndicator { amplitude, radius } => {
                if r <= *radius {
                    *amplitude
                } else {
                    0.0
                }
            }
            KernelShape::Gaussian { amplitude, sigma } => {
                amplitude * (-(r * r) / (2.0 * sigma * sigma)).exp()
            }
            KernelShape::TabulatedRadial { radii, values } => {
                let last = radii.len() - 1;
                if r <= radii[0] {
                    return values[0];
                }
                if r > radii[last] {
                    return 0.0;
                }
                let k = radii.partition_point(|&x| x < r).max(1);
                let (r0, r1) = (radii[k - 1], radii[k]);
                let w = (r - r0) / (r1 - r0);
                (values[k - 1] * (1.0 - w) + values[k] * w).max(0.0)
            }
        }
    }

    /// Kernel value at a displacement vector (only the first `dim` entries are used).
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x[..self.dim].iter().map(|v| v * v).sum();
        self.radial(r2.sqrt())
    }

    /// Radius beyond which the kernel vanishes, if compactly supported.
    pub fn support_radius(&self) -> Option<f64> {
        match &self.shape {
            KernelShape::BallIndicator { radius, .. } => Some(*radius),
            KernelShape::Gaussian { .. } => None,
            KernelShape::TabulatedRadial { radii, .. } => radii.last().copied(),
        }
    }

    /// Interaction range used by the particle simulation.
    ///
    /// Compact kernels use their support; Gaussians are cut where the tail
    /// mass drops below 1e-8 (6 sigma in d = 1, 6.07 sigma in d = 2).
    pub fn cutoff_radius(&self) -> f64 {
        match &self.shape {
            KernelShape::Gaussian { sigma, .. } => {
                if self.dim == 1 {
                    6.0 * sigma
                } else {
                    sigma * (2.0 * (1.0 / GAUSSIAN_TAIL_MASS).ln()).sqrt()
                }
            }
            _ => self.support_radius().unwrap_or(0.0),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.shape {
            KernelShape::BallIndicator { amplitude, .. }
            | KernelShape::Gaussian { amplitude, .. } => *amplitude == 0.0,
            KernelShape::TabulatedRadial { values, .. } => values.iter().all(|&v| v == 0.0),
        }
    }

    /// Same shape with every value multiplied by `factor >= 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        nonneg_finite("scale factor", factor)?;
        let shape = match &self.shape {
            KernelShape::BallIndicator { amplitude, radius } => KernelShape::BallIndicator {
                amplitude: amplitude * factor,
                radius: *radius,
            },
            KernelShape::Gaussian { amplitude, sigma } => KernelShape::Gaussian {
                amplitude: amplitude * factor,
                sigma: *sigma,
            },
            KernelShape::TabulatedRadial { radii, values } => KernelShape::TabulatedRadial {
                radii: radii.clone(),
                values: values.iter().map(|v| v * factor).collect(),
            },
        };
        Self::new(shape, self.dim)
    }

    pub fn stats(&self) -> KernelStats {
        kernel_stats(self)
    }
}

/// Closed-form mass and sup-norm for ball and Gaussian kernels, exact
/// integration of the piecewise-linear profile for tabulated kernels.
pub fn kernel_stats(k: &KernelSpec) -> KernelStats {
    let d = k.dim;
    match &k.shape {
        KernelShape::BallIndicator { amplitude, radius } => KernelStats {
            mass: amplitude * ball_volume(d, *radius),
            supnorm: *amplitude,
        },
        KernelShape::Gaussian { amplitude, sigma } => KernelStats {
            mass: amplitude * (sigma * (2.0 * PI).sqrt()).powi(d as i32),
            supnorm: *amplitude,
        },
        KernelShape::TabulatedRadial { radii, values } => {
            let (r0, v0) = (radii[0], values[0]);
            let mut mass = match d {
                1 => 2.0 * v0 * r0,
                _ => PI * v0 * r0 * r0,
            };
            for w in 0..radii.len() - 1 {
                let (a, b) = (radii[w], radii[w + 1]);
                let (va, vb) = (values[w], values[w + 1]);
                mass += match d {
                    1 => (va + vb) * (b - a),
                    _ => {
                        let slope = (vb - va) / (b - a);
                        let linear = (b * b * b - a * a * a) / 3.0 - a * (b * b - a * a) / 2.0;
                        2.0 * PI * (va * (b * b - a * a) / 2.0 + slope * linear)
                    }
                };
            }
            let supnorm = values.iter().copied().fold(0.0, f64::max);
            KernelStats { mass, supnorm }
        }
    }
}
