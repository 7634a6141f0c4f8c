use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `m > <a+>`: decay to zero.
    Subcritical,
    /// `m = <a+>`: algebraic decay.
    Critical,
    /// `m < <a+>`: approach to the carrying capacity.
    Supercritical,
}

impl Regime {
    pub fn classify(mortality: f64, plus_mass: f64) -> Self {
        if mortality > plus_mass {
            Regime::Subcritical
        } else if mortality == plus_mass {
            Regime::Critical
        } else {
            Regime::Supercritical
        }
    }
}

/// Spatially homogeneous solution of `psi' = (<a+> - m) psi - <a-> psi^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernoulliSolution {
    pub psi0: f64,
    pub mortality: f64,
    pub plus_mass: f64,
    pub minus_mass: f64,
    /// Carrying capacity, defined when `<a+> > m` and `<a-> > 0`.
    pub q: Option<f64>,
    pub regime: Regime,
}

impl BernoulliSolution {
    pub fn new(psi0: f64, mortality: f64, plus_mass: f64, minus_mass: f64) -> Result<Self> {
        if !(psi0.is_finite() && psi0 >= 0.0) {
            return Err(Error::param(
                "psi0",
                format!("initial density must be >= 0, got {psi0}"),
            ));
        }
        if !(mortality >= 0.0 && plus_mass >= 0.0 && minus_mass >= 0.0) {
            return Err(Error::param(
                "params",
                "rates and masses must be nonnegative",
            ));
        }
        let regime = Regime::classify(mortality, plus_mass);
        let q = (plus_mass > mortality && minus_mass > 0.0)
            .then(|| (plus_mass - mortality) / minus_mass);
        Ok(Self {
            psi0,
            mortality,
            plus_mass,
            minus_mass,
            q,
            regime,
        })
    }

    pub fn at(&self, t: f64) -> f64 {
        let psi0 = self.psi0;
        if psi0 == 0.0 {
            return 0.0;
        }
        let b = self.minus_mass;
        let lambda = self.plus_mass - self.mortality;
        match (self.regime, self.q) {
            (Regime::Supercritical, Some(q)) => psi0 * q / (psi0 + (q - psi0) * (-q * b * t).exp()),
            (Regime::Critical, _) => psi0 / (1.0 + b * psi0 * t),
            _ => {
                // 1/psi solves a linear equation; expm1 keeps small |lambda t| accurate
                let growth = (lambda * t).exp();
                psi0 * growth / (1.0 + b * psi0 * (lambda * t).exp_m1() / lambda)
            }
        }
    }
}

/// Closed-form homogeneous density at time `t`.
pub fn bernoulli_exact(
    psi0: f64,
    mortality: f64,
    plus_mass: f64,
    minus_mass: f64,
    t: f64,
) -> Result<f64> {
    Ok(BernoulliSolution::new(psi0, mortality, plus_mass, minus_mass)?.at(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Fine RK4 on the scalar Bernoulli ODE.
    fn ode_oracle(psi0: f64, m: f64, ap: f64, am: f64, t: f64) -> f64 {
        let f = |y: f64| (ap - m) * y - am * y * y;
        let n = 20_000;
        let h = t / n as f64;
        let mut y = psi0;
        for _ in 0..n {
            let k1 = f(y);
            let k2 = f(y + 0.5 * h * k1);
            let k3 = f(y + 0.5 * h * k2);
            let k4 = f(y + h * k3);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        y
    }

    #[test]
    fn q_fixed_point() {
        let s = BernoulliSolution::new(1.0, 1.0, 3.0, 2.0).unwrap();
        assert_eq!(s.q, Some(1.0));
        for t in [0.0, 0.5, 3.0, 100.0] {
            assert_eq!(s.at(t), 1.0);
        }
    }

    #[test]
    fn critical_case() {
        assert_eq!(bernoulli_exact(1.0, 2.0, 2.0, 1.0, 1.0).unwrap(), 0.5);
    }

    #[test]
    fn all_regimes_match_ode() {
        for &(psi0, m, ap, am) in &[
            (0.2, 1.0, 3.0, 2.0),
            (2.5, 1.0, 3.0, 2.0),
            (1.3, 2.0, 1.0, 0.7),
            (0.4, 1.5, 1.5, 2.0),
            (0.3, 0.5, 1.0, 0.0),
            (0.3, 1.5, 1.0, 0.0),
        ] {
            for t in [0.1, 1.0, 4.0] {
                let exact = bernoulli_exact(psi0, m, ap, am, t).unwrap();
                let oracle = ode_oracle(psi0, m, ap, am, t);
                assert!(
                    (exact - oracle).abs() <= 1e-10 * oracle.abs().max(1e-12),
                    "{psi0} {m} {ap} {am} {t}"
                );
            }
        }
    }

    #[test]
    fn negative_psi0_rejected() {
        assert!(bernoulli_exact(-0.1, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn regimes() {
        assert_eq!(Regime::classify(2.0, 1.0), Regime::Subcritical);
        assert_eq!(Regime::classify(1.0, 1.0), Regime::Critical);
        assert_eq!(Regime::classify(0.5, 1.0), Regime::Supercritical);
    }
}
