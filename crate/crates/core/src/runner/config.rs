use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::hierarchy::Closure;
use crate::kernels::{KernelShape, KernelSpec, TorusDomain};
use crate::kinetic::DensityField;
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Simulate,
    Kinetic,
    Hierarchy,
    VlasovCompare,
    EpsilonSweep,
    Certify,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Kinetic => "kinetic",
            Self::Hierarchy => "hierarchy",
            Self::VlasovCompare => "vlasov-compare",
            Self::EpsilonSweep => "epsilon-sweep",
            Self::Certify => "certify",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub dim: usize,
    pub edge: f64,
    pub points: usize,
}

/// Kernel entry; Gaussians may be given by `amplitude` or by total `mass`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelConfig {
    BallIndicator {
        amplitude: f64,
        radius: f64,
    },
    Gaussian {
        #[serde(default)]
        amplitude: Option<f64>,
        #[serde(default)]
        mass: Option<f64>,
        sigma: f64,
    },
    TabulatedRadial {
        radii: Vec<f64>,
        values: Vec<f64>,
    },
    Zero,
}

impl KernelConfig {
    fn build(&self, dim: usize, key: &str) -> Result<KernelSpec> {
        let wrap = |e: Error| match e {
            Error::InvalidKernel(reason) => Error::Config {
                key: key.into(),
                reason,
            },
            other => other,
        };
        match self {
            Self::BallIndicator { amplitude, radius } => KernelSpec::ball(*amplitude, *radius, dim),
            Self::Gaussian {
                amplitude,
                mass,
                sigma,
            } => match (amplitude, mass) {
                (Some(a), None) => KernelSpec::gaussian(*a, *sigma, dim),
                (None, Some(m)) => KernelSpec::gaussian_with_mass(*m, *sigma, dim),
                _ => {
                    return Err(Error::Config {
                        key: key.into(),
                        reason: "give exactly one of `amplitude` and `mass`".into(),
                    })
                }
            },
            Self::TabulatedRadial { radii, values } => KernelSpec::new(
                KernelShape::TabulatedRadial {
                    radii: radii.clone(),
                    values: values.clone(),
                },
                dim,
            ),
            Self::Zero => KernelSpec::zero(dim),
        }
        .map_err(wrap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub m: f64,
    pub a_plus: KernelConfig,
    pub a_minus: KernelConfig,
    #[serde(default = "one")]
    pub epsilon: f64,
    #[serde(default)]
    pub rescaled_mode: bool,
}

fn one() -> f64 {
    1.0
}

/// Initial density on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialConfig {
    Constant {
        value: f64,
    },
    /// `mean + amplitude * sin(2 pi modes x / L)` along the first axis.
    Sine {
        mean: f64,
        amplitude: f64,
        #[serde(default = "one_usize")]
        modes: usize,
    },
    /// Independent uniform values in `[low, high)` per grid point.
    Random {
        low: f64,
        high: f64,
        #[serde(default)]
        seed: u64,
    },
    Values {
        values: Vec<f64>,
    },
}

fn one_usize() -> usize {
    1
}

impl InitialConfig {
    pub fn is_constant(&self) -> Option<f64> {
        match self {
            Self::Constant { value } => Some(*value),
            _ => None,
        }
    }

    pub fn build(&self, dom: &TorusDomain) -> Result<DensityField> {
        let field = match self {
            Self::Constant { value } => DensityField::constant(dom.clone(), *value),
            Self::Sine {
                mean,
                amplitude,
                modes,
            } => {
                let k = 2.0 * std::f64::consts::PI * *modes as f64 / dom.edge();
                DensityField::from_fn(dom.clone(), |x| mean + amplitude * (k * x[0]).sin())
            }
            Self::Random { low, high, seed } => {
                if !(low <= high) {
                    return Err(Error::Config {
                        key: "initial.low".into(),
                        reason: "need low <= high".into(),
                    });
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let vals = (0..dom.len())
                    .map(|_| {
                        if low == high {
                            *low
                        } else {
                            rng.random_range(*low..*high)
                        }
                    })
                    .collect();
                DensityField::new(dom.clone(), vals)
            }
            Self::Values { values } => DensityField::new(dom.clone(), values.clone()),
        };
        field.map_err(|e| Error::Config {
            key: "initial".into(),
            reason: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KineticMethod {
    #[default]
    Rk4,
    Picard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub t_end: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub output_every: Option<usize>,
    #[serde(default = "one_usize")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub snapshot_times: Option<Vec<f64>>,
    #[serde(default = "default_cap")]
    pub population_cap: usize,
    #[serde(default = "default_bins")]
    pub pair_bins: usize,
    #[serde(default)]
    pub pair_r_max: Option<f64>,
    #[serde(default)]
    pub method: KineticMethod,
    #[serde(default = "default_picard_iter")]
    pub picard_max_iter: usize,
}

fn default_cap() -> usize {
    1_000_000
}

fn default_bins() -> usize {
    20
}

fn default_picard_iter() -> usize {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HierarchyConfig {
    #[serde(default = "two")]
    pub order: usize,
    #[serde(default)]
    pub closure: Closure,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "minus_one")]
    pub alpha: f64,
    #[serde(default)]
    pub alpha_star: f64,
}

fn two() -> usize {
    2
}

fn minus_one() -> f64 {
    -1.0
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        Self {
            order: 2,
            closure: Closure::default(),
            epsilon: 0.0,
            alpha: -1.0,
            alpha_star: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_sweep_eps")]
    pub epsilons: Vec<f64>,
}

fn default_sweep_eps() -> Vec<f64> {
    vec![0.4, 0.2, 0.1, 0.05]
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            epsilons: default_sweep_eps(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VlasovConfig {
    #[serde(default = "default_vlasov_eps")]
    pub epsilons: Vec<f64>,
    /// Comparison times; defaults to the run's snapshot times.
    #[serde(default)]
    pub times: Option<Vec<f64>>,
}

fn default_vlasov_eps() -> Vec<f64> {
    vec![1.0, 0.25, 0.0625]
}

impl Default for VlasovConfig {
    fn default() -> Self {
        Self {
            epsilons: default_vlasov_eps(),
            times: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub kappa_minus: Option<f64>,
    #[serde(default)]
    pub kappa_plus: Option<f64>,
}

fn default_delta() -> f64 {
    crate::analysis::DEFAULT_DELTA
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            theta: None,
            delta: default_delta(),
            kappa_minus: None,
            kappa_plus: None,
        }
    }
}

/// Everything needed to reproduce one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub domain: DomainConfig,
    pub params: ParamsConfig,
    pub initial: InitialConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub hierarchy: HierarchyConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub vlasov: VlasovConfig,
    #[serde(default)]
    pub certify: CertifyConfig,
}

/// Config resolved into library types.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub domain: TorusDomain,
    pub params: ModelParams,
    pub rho0: DensityField,
}

fn config_err(key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.into(),
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    /// Parse TOML; errors name the offending key path.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            Error::Config {
                key: if key.is_empty() || key == "." {
                    "<root>".into()
                } else {
                    key
                },
                reason: e.into_inner().message().trim().to_string(),
            }
        })
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Re-validate every parameter, producing the library objects.
    pub fn resolve(&self) -> Result<Resolved> {
        let d = &self.domain;
        let domain = TorusDomain::new(d.dim, d.edge, d.points)
            .map_err(|e| config_err("domain", e.to_string()))?;
        let a_plus = self.params.a_plus.build(d.dim, "params.a_plus")?;
        let a_minus = self.params.a_minus.build(d.dim, "params.a_minus")?;
        let mut params =
            ModelParams::new(self.params.m, a_plus, a_minus).map_err(param_to_config)?;
        if self.params.rescaled_mode {
            params = params
                .rescaled(self.params.epsilon)
                .map_err(param_to_config)?;
        } else if self.params.epsilon != 1.0 {
            return Err(config_err(
                "params.epsilon",
                "epsilon other than 1 requires `rescaled_mode = true`",
            ));
        }
        let rho0 = self.initial.build(&domain)?;
        let r = &self.run;
        if !(r.t_end.is_finite() && r.t_end >= 0.0) {
            return Err(config_err("run.t_end", "must be finite and >= 0"));
        }
        if let Some(dt) = r.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(config_err("run.dt", "must be > 0"));
            }
        }
        if r.runs == 0 {
            return Err(config_err("run.runs", "must be >= 1"));
        }
        if let Some(ts) = &r.snapshot_times {
            if ts.windows(2).any(|w| w[1] <= w[0])
                || ts.iter().any(|&t| !(0.0..=r.t_end).contains(&t))
            {
                return Err(config_err(
                    "run.snapshot_times",
                    "must be strictly increasing within [0, t_end]",
                ));
            }
        }
        if let Some(rm) = r.pair_r_max {
            if !(rm > 0.0 && 2.0 * rm <= d.edge) {
                return Err(config_err("run.pair_r_max", "must lie in (0, L/2]"));
            }
        }
        match self.kind {
            ExperimentKind::Hierarchy | ExperimentKind::EpsilonSweep => {
                if d.dim != 1 {
                    return Err(config_err(
                        "domain.dim",
                        "the correlation chain is implemented for d = 1",
                    ));
                }
                let h = &self.hierarchy;
                if !(h.order == 1 || h.order == 2) {
                    return Err(config_err("hierarchy.order", "must be 1 or 2"));
                }
                if !(0.0..=1.0).contains(&h.epsilon) {
                    return Err(config_err("hierarchy.epsilon", "must lie in [0, 1]"));
                }
                if h.alpha >= h.alpha_star {
                    return Err(config_err(
                        "hierarchy.alpha",
                        "must be below hierarchy.alpha_star",
                    ));
                }
                if self.kind == ExperimentKind::EpsilonSweep
                    && (self.sweep.epsilons.is_empty()
                        || self.sweep.epsilons.iter().any(|e| !(0.0..=1.0).contains(e)))
                {
                    return Err(config_err("sweep.epsilons", "need values in [0, 1]"));
                }
            }
            ExperimentKind::VlasovCompare => {
                if self.vlasov.epsilons.is_empty()
                    || self
                        .vlasov
                        .epsilons
                        .iter()
                        .any(|e| !(*e > 0.0 && *e <= 1.0))
                {
                    return Err(config_err("vlasov.epsilons", "need values in (0, 1]"));
                }
                if let Some(ts) = &self.vlasov.times {
                    if ts.windows(2).any(|w| w[1] <= w[0])
                        || ts.iter().any(|&t| !(0.0..=r.t_end).contains(&t))
                    {
                        return Err(config_err(
                            "vlasov.times",
                            "must be strictly increasing within [0, t_end]",
                        ));
                    }
                }
            }
            ExperimentKind::Certify => {
                let c = &self.certify;
                if c.theta.is_none() && (c.kappa_minus.is_none() || c.kappa_plus.is_none()) {
                    return Err(config_err(
                        "certify",
                        "give `theta`, or both `kappa_minus` and `kappa_plus`",
                    ));
                }
                if let Some(t) = c.theta {
                    if !(t > 0.0) {
                        return Err(config_err("certify.theta", "must be > 0"));
                    }
                }
                if !(c.delta > 0.0) {
                    return Err(config_err("certify.delta", "must be > 0"));
                }
            }
            _ => {}
        }
        Ok(Resolved {
            domain,
            params,
            rho0,
        })
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        self.run.snapshot_times.clone().unwrap_or_else(|| {
            let n = 10;
            (0..=n)
                .map(|i| self.run.t_end * i as f64 / n as f64)
                .collect()
        })
    }

    pub fn pair_r_max(&self) -> f64 {
        self.run
            .pair_r_max
            .unwrap_or_else(|| (0.5 * self.domain.edge).min(2.0))
    }
}

fn param_to_config(e: Error) -> Error {
    match e {
        Error::InvalidParameter { key, reason } => Error::Config { key, reason },
        other => other,
    }
}
