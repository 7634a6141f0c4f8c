use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::TorusDomain;
use crate::kinetic::DensityField;

/// How `k3` is expressed through lower orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Closure {
    /// `k3 = k1 k1 k1`.
    MeanField,
    /// Vanishing third cumulant:
    /// `k3(x,y,z) = k1(x) k2(y,z) + k1(y) k2(x,z) + k1(z) k2(x,y) - 2 k1(x) k1(y) k1(z)`.
    #[default]
    ZeroThirdCumulant,
}

/// Correlation functions `k0 = 1`, `k1` and `k2` on a one-dimensional grid.
///
/// `k2` is stored row-major as an `M x M` matrix and kept exactly symmetric.
/// With `order == 1` only `k1` is dynamic and `k2` is held at `k1 (x) k1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationChain {
    domain: TorusDomain,
    pub(crate) k1: Vec<f64>,
    pub(crate) k2: Vec<f64>,
    order: usize,
    closure: Closure,
}

impl CorrelationChain {
    pub fn new(
        domain: TorusDomain,
        k1: Vec<f64>,
        k2: Vec<f64>,
        order: usize,
        closure: Closure,
    ) -> Result<Self> {
        if domain.dim() != 1 {
            return Err(Error::InvalidDomain(
                "correlation chains are implemented for d = 1 only".into(),
            ));
        }
        let m = domain.points();
        if k1.len() != m || k2.len() != m * m {
            return Err(Error::DomainMismatch(format!(
                "chain needs {m} values for k1 and {} for k2, got {} and {}",
                m * m,
                k1.len(),
                k2.len()
            )));
        }
        if !(order == 1 || order == 2) {
            return Err(Error::param(
                "hierarchy.order",
                format!("truncation order must be 1 or 2, got {order}"),
            ));
        }
        if k1.iter().chain(&k2).any(|v| !v.is_finite()) {
            return Err(Error::param(
                "hierarchy.initial",
                "chain entries must be finite",
            ));
        }
        for i in 0..m {
            for j in 0..i {
                if k2[i * m + j] != k2[j * m + i] {
                    return Err(Error::param(
                        "hierarchy.initial",
                        format!("k2 is not symmetric at ({i}, {j})"),
                    ));
                }
            }
        }
        let mut chain = Self {
            domain,
            k1,
            k2,
            order,
            closure,
        };
        if order == 1 {
            chain.refresh_product();
        }
        Ok(chain)
    }

    pub fn zero(domain: TorusDomain, order: usize, closure: Closure) -> Result<Self> {
        let m = domain.points();
        Self::new(domain, vec![0.0; m], vec![0.0; m * m], order, closure)
    }

    pub fn with_closure(mut self, closure: Closure) -> Self {
        self.closure = closure;
        self
    }

    pub fn with_order(mut self, order: usize) -> Result<Self> {
        if !(order == 1 || order == 2) {
            return Err(Error::param(
                "hierarchy.order",
                format!("truncation order must be 1 or 2, got {order}"),
            ));
        }
        self.order = order;
        if order == 1 {
            self.refresh_product();
        }
        Ok(self)
    }

    pub fn domain(&self) -> &TorusDomain {
        &self.domain
    }

    pub fn points(&self) -> usize {
        self.domain.points()
    }

    pub fn k0(&self) -> f64 {
        1.0
    }

    pub fn k1(&self) -> &[f64] {
        &self.k1
    }

    pub fn k2(&self) -> &[f64] {
        &self.k2
    }

    pub fn k2_at(&self, i: usize, j: usize) -> f64 {
        self.k2[i * self.points() + j]
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn closure(&self) -> Closure {
        self.closure
    }

    /// `k1` as a density field (negative entries, possible under a closure, are an error).
    pub fn density(&self) -> Result<DensityField> {
        DensityField::new(self.domain.clone(), self.k1.clone())
    }

    /// `sup |k2 - k1 (x) k1|`.
    pub fn chaos_residual(&self) -> f64 {
        let m = self.points();
        let mut r = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                r = r.max((self.k2[i * m + j] - self.k1[i] * self.k1[j]).abs());
            }
        }
        r
    }

    /// Pair correlation normalized by the product, `k2 / (k1 (x) k1)`, where defined.
    pub fn normalized_pair(&self, i: usize, j: usize) -> Option<f64> {
        let p = self.k1[i] * self.k1[j];
        (p > 0.0).then(|| self.k2_at(i, j) / p)
    }

    /// Replace `k2` by its symmetric part; returns the largest asymmetry removed.
    pub(crate) fn symmetrize(&mut self) -> f64 {
        let m = self.points();
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in 0..i {
                let (a, b) = (self.k2[i * m + j], self.k2[j * m + i]);
                worst = worst.max((a - b).abs());
                let s = 0.5 * (a + b);
                self.k2[i * m + j] = s;
                self.k2[j * m + i] = s;
            }
        }
        worst
    }

    pub(crate) fn refresh_product(&mut self) {
        let m = self.points();
        for i in 0..m {
            for j in 0..m {
                self.k2[i * m + j] = self.k1[i] * self.k1[j];
            }
        }
    }

    pub(crate) fn is_finite(&self) -> bool {
        self.k1.iter().chain(&self.k2).all(|v| v.is_finite())
    }

    pub(crate) fn sup_k1(&self) -> f64 {
        self.k1.iter().fold(0.0f64, |s, v| s.max(v.abs()))
    }

    pub(crate) fn sup_k2(&self) -> f64 {
        self.k2.iter().fold(0.0f64, |s, v| s.max(v.abs()))
    }
}

/// Poisson state with density `rho`: `k1 = rho`, `k2 = rho (x) rho`.
pub fn product_state(rho: &DensityField) -> Result<CorrelationChain> {
    let m = rho.domain().points();
    let v = rho.values();
    let mut k2 = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            k2[i * m + j] = v[i] * v[j];
        }
    }
    CorrelationChain::new(rho.domain().clone(), v.to_vec(), k2, 2, Closure::default())
}

/// `max(1, e^a sup|k1|, e^{2a} sup|k2|)`, over the implemented orders.
pub fn sub_poissonian_norm(chain: &CorrelationChain, alpha: f64) -> f64 {
    let mut n = 1.0f64.max(alpha.exp() * chain.sup_k1());
    if chain.order() >= 2 {
        n = n.max((2.0 * alpha).exp() * chain.sup_k2());
    }
    n
}

/// Norm distance of two chains; the common `k0 = 1` cancels.
pub fn chain_distance(a: &CorrelationChain, b: &CorrelationChain, alpha: f64) -> Result<f64> {
    if !a.domain().same_as(b.domain()) {
        return Err(Error::DomainMismatch(
            "chains live on different grids".into(),
        ));
    }
    let d1 =
        a.k1.iter()
            .zip(&b.k1)
            .fold(0.0f64, |s, (x, y)| s.max((x - y).abs()));
    let d2 =
        a.k2.iter()
            .zip(&b.k2)
            .fold(0.0f64, |s, (x, y)| s.max((x - y).abs()));
    let mut d = alpha.exp() * d1;
    if a.order().max(b.order()) >= 2 {
        d = d.max((2.0 * alpha).exp() * d2);
    }
    Ok(d)
}

/// A norm value together with the scale it was measured at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormScale {
    pub alpha: f64,
    pub alpha_star: f64,
    pub value: f64,
}

impl NormScale {
    pub fn measure(chain: &CorrelationChain, alpha: f64, alpha_star: f64) -> Self {
        Self {
            alpha,
            alpha_star,
            value: sub_poissonian_norm(chain, alpha),
        }
    }
}
