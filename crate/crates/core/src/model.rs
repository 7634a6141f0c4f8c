//! Model parameters shared by the three tiers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{periodize, ConvolutionMethod, GridKernel, KernelSpec, TorusDomain};

/// Mortality, dispersal and competition kernels, and the scaling parameter.
///
/// In rescaled mode the microscopic competition kernel is `epsilon * a_minus`;
/// the kinetic equation always uses `a_minus` itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mortality: f64,
    pub a_plus: KernelSpec,
    pub a_minus: KernelSpec,
    pub epsilon: f64,
    pub rescaled: bool,
}

impl ModelParams {
    pub fn new(mortality: f64, a_plus: KernelSpec, a_minus: KernelSpec) -> Result<Self> {
        let p = Self {
            mortality,
            a_plus,
            a_minus,
            epsilon: 1.0,
            rescaled: false,
        };
        p.validate()?;
        Ok(p)
    }

    /// Switch on the Vlasov-rescaled microscopic model at scale `epsilon`.
    pub fn rescaled(mut self, epsilon: f64) -> Result<Self> {
        self.epsilon = epsilon;
        self.rescaled = true;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mortality.is_finite() && self.mortality >= 0.0) {
            return Err(Error::param(
                "params.m",
                format!("mortality must be >= 0, got {}", self.mortality),
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::param(
                "params.epsilon",
                format!("epsilon must lie in (0, 1], got {}", self.epsilon),
            ));
        }
        if self.a_plus.dim() != self.a_minus.dim() {
            return Err(Error::param(
                "params.a_minus",
                "kernels must share a dimension",
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.a_plus.dim()
    }

    /// Competition scale seen by individual particles.
    pub fn effective_epsilon(&self) -> f64 {
        if self.rescaled {
            self.epsilon
        } else {
            1.0
        }
    }

    /// Periodize both kernels onto `dom`.
    pub fn on_grid(&self, dom: &TorusDomain) -> Result<GridModel> {
        Ok(GridModel {
            domain: dom.clone(),
            mortality: self.mortality,
            a_plus: periodize(&self.a_plus, dom)?,
            a_minus: periodize(&self.a_minus, dom)?,
            method: ConvolutionMethod::Auto,
        })
    }
}

/// Model discretized on a torus grid; all grid solvers take this.
#[derive(Debug, Clone)]
pub struct GridModel {
    pub domain: TorusDomain,
    pub mortality: f64,
    pub a_plus: GridKernel,
    pub a_minus: GridKernel,
    pub method: ConvolutionMethod,
}

impl GridModel {
    pub fn new(mortality: f64, a_plus: GridKernel, a_minus: GridKernel) -> Result<Self> {
        if !a_plus.domain().same_as(a_minus.domain()) {
            return Err(Error::DomainMismatch(
                "a_plus and a_minus grids differ".into(),
            ));
        }
        if !(mortality.is_finite() && mortality >= 0.0) {
            return Err(Error::param(
                "params.m",
                format!("mortality must be >= 0, got {mortality}"),
            ));
        }
        Ok(Self {
            domain: a_plus.domain().clone(),
            mortality,
            a_plus,
            a_minus,
            method: ConvolutionMethod::Auto,
        })
    }

    pub fn with_method(mut self, method: ConvolutionMethod) -> Self {
        self.method = method;
        self
    }

    /// Periodized `<a+>`.
    pub fn plus_mass(&self) -> f64 {
        self.a_plus.discrete_mass()
    }

    /// Periodized `<a->`.
    pub fn minus_mass(&self) -> f64 {
        self.a_minus.discrete_mass()
    }

    /// Carrying capacity `(<a+> - m) / <a->` when it is positive.
    pub fn carrying_capacity(&self) -> Option<f64> {
        let (ap, am) = (self.plus_mass(), self.minus_mass());
        (ap > self.mortality && am > 0.0).then(|| (ap - self.mortality) / am)
    }

    pub(crate) fn convolve_plus(&self, input: &[f64], out: &mut [f64]) {
        self.a_plus.convolve_into(input, out, self.method);
    }

    pub(crate) fn convolve_minus(&self, input: &[f64], out: &mut [f64]) {
        self.a_minus.convolve_into(input, out, self.method);
    }
}
