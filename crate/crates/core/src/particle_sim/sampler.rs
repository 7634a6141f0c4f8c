//! Offspring displacement sampling from the normalized dispersal kernel.

use rand::Rng;
use std::f64::consts::PI;

use crate::kernels::{KernelShape, KernelSpec};

const TABLE_POINTS: usize = 4096;

#[derive(Debug, Clone)]
pub(crate) enum RadialSampler {
    /// Zero kernel: births never happen.
    Empty,
    /// Uniform on a ball; sampled exactly.
    Ball { dim: usize, radius: f64 },
    /// Inverse CDF of the radial distance from a tabulated profile.
    Table {
        dim: usize,
        radii: Vec<f64>,
        cdf: Vec<f64>,
    },
    /// Uniform proposals on the support ball, accepted with probability `a(r) / sup a`.
    Rejection {
        kernel: KernelSpec,
        radius: f64,
        sup: f64,
    },
}

fn radius_in_ball<R: Rng + ?Sized>(dim: usize, radius: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    if dim == 1 {
        radius * u
    } else {
        radius * u.sqrt()
    }
}

fn direction<R: Rng + ?Sized>(dim: usize, r: f64, rng: &mut R) -> [f64; 2] {
    if dim == 1 {
        if rng.random::<bool>() {
            [r, 0.0]
        } else {
            [-r, 0.0]
        }
    } else {
        let phi = 2.0 * PI * rng.random::<f64>();
        [r * phi.cos(), r * phi.sin()]
    }
}

impl RadialSampler {
    pub(crate) fn new(kernel: &KernelSpec) -> Self {
        let dim = kernel.dim();
        if kernel.is_zero() {
            return Self::Empty;
        }
        match kernel.shape() {
            KernelShape::BallIndicator { radius, .. } => Self::Ball {
                dim,
                radius: *radius,
            },
            KernelShape::Gaussian { .. } => {
                let rmax = kernel.cutoff_radius();
                let radii: Vec<f64> = (0..=TABLE_POINTS)
                    .map(|k| rmax * k as f64 / TABLE_POINTS as f64)
                    .collect();
                let density = |r: f64| kernel.radial(r) * if dim == 1 { 1.0 } else { r };
                let mut cdf = vec![0.0; radii.len()];
                for k in 1..radii.len() {
                    let (a, b) = (radii[k - 1], radii[k]);
                    let mid = 0.5 * (a + b);
                    cdf[k] =
                        cdf[k - 1] + (b - a) / 6.0 * (density(a) + 4.0 * density(mid) + density(b));
                }
                let total = cdf[TABLE_POINTS];
                cdf.iter_mut().for_each(|c| *c /= total);
                Self::Table { dim, radii, cdf }
            }
            KernelShape::TabulatedRadial { values, .. } => Self::Rejection {
                kernel: kernel.clone(),
                radius: kernel.support_radius().unwrap_or(0.0),
                sup: values.iter().copied().fold(0.0, f64::max),
            },
        }
    }

    /// Displacement of a newborn from its parent.
    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        match self {
            Self::Empty => [0.0, 0.0],
            Self::Ball { dim, radius } => {
                let r = radius_in_ball(*dim, *radius, rng);
                direction(*dim, r, rng)
            }
            Self::Table { dim, radii, cdf } => {
                let u: f64 = rng.random();
                let k = cdf.partition_point(|&c| c <= u).clamp(1, cdf.len() - 1);
                let (c0, c1) = (cdf[k - 1], cdf[k]);
                let w = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
                let r = radii[k - 1] + w * (radii[k] - radii[k - 1]);
                direction(*dim, r, rng)
            }
            Self::Rejection {
                kernel,
                radius,
                sup,
            } => {
                let dim = kernel.dim();
                loop {
                    let r = radius_in_ball(dim, *radius, rng);
                    if rng.random::<f64>() * sup < kernel.radial(r) {
                        return direction(dim, r, rng);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn ks<F: Fn(f64) -> f64>(mut samples: Vec<f64>, cdf: F) -> f64 {
        samples.sort_by(f64::total_cmp);
        let n = samples.len() as f64;
        samples
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max)
    }

    fn radii(k: &KernelSpec, n: usize, seed: u64) -> Vec<f64> {
        let s = RadialSampler::new(k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let d = s.sample(&mut rng);
                (d[0] * d[0] + d[1] * d[1]).sqrt()
            })
            .collect()
    }

    #[test]
    fn gaussian_radial_cdf_1d() {
        let k = KernelSpec::gaussian(1.0, 0.7, 1).unwrap();
        let n = Normal::new(0.0, 0.7).unwrap();
        let d = ks(radii(&k, 100_000, 1), |r| 2.0 * n.cdf(r) - 1.0);
        assert!(d < 0.02, "ks {d}");
    }

    #[test]
    fn gaussian_radial_cdf_2d() {
        let k = KernelSpec::gaussian(2.0, 1.3, 2).unwrap();
        let d = ks(radii(&k, 100_000, 2), |r| {
            1.0 - (-r * r / (2.0 * 1.3 * 1.3)).exp()
        });
        assert!(d < 0.02, "ks {d}");
    }

    #[test]
    fn ball_radial_cdf() {
        let k1 = KernelSpec::ball(1.0, 2.0, 1).unwrap();
        assert!(ks(radii(&k1, 100_000, 3), |r| (r / 2.0).min(1.0)) < 0.02);
        let k2 = KernelSpec::ball(1.0, 2.0, 2).unwrap();
        assert!(ks(radii(&k2, 100_000, 4), |r| (r * r / 4.0).min(1.0)) < 0.02);
    }

    #[test]
    fn tabulated_radial_cdf() {
        // Linear ramp a(r) = 1 - r on [0, 1] in d = 1: radial CDF 2r - r^2.
        let k = KernelSpec::tabulated(vec![0.0, 1.0], vec![1.0, 0.0], 1).unwrap();
        let d = ks(radii(&k, 100_000, 5), |r| (2.0 * r - r * r).min(1.0));
        assert!(d < 0.02, "ks {d}");
    }

    #[test]
    fn signs_are_balanced() {
        let s = RadialSampler::new(&KernelSpec::ball(1.0, 1.0, 1).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let pos = (0..20_000).filter(|_| s.sample(&mut rng)[0] > 0.0).count() as f64;
        assert!((pos / 20_000.0 - 0.5).abs() < 3.0 * (0.25f64 / 20_000.0).sqrt());
    }
}
