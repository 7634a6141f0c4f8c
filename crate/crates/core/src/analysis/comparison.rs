use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{GridKernel, KernelShape, KernelSpec};

/// Guard used in every grid comparison `a+ > theta a- + TIE_TOLERANCE`.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Smallest `theta` with `a+ <= theta a-` on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "theta", rename_all = "kebab-case")]
pub enum Domination {
    Theta(f64),
    /// `a+ = 0`: every `theta > 0` works.
    AnyTheta,
    /// `a+ > 0` somewhere `a-` vanishes.
    None,
}

impl Domination {
    pub fn theta(&self) -> Option<f64> {
        match self {
            Domination::Theta(t) => Some(*t),
            Domination::AnyTheta => Some(0.0),
            Domination::None => None,
        }
    }
}

fn check_pair(a_plus: &GridKernel, a_minus: &GridKernel) -> Result<()> {
    if a_plus.domain() == a_minus.domain() {
        Ok(())
    } else {
        Err(Error::DomainMismatch(
            "kernels periodized on different grids".into(),
        ))
    }
}

pub fn domination_theta(a_plus: &GridKernel, a_minus: &GridKernel) -> Result<Domination> {
    check_pair(a_plus, a_minus)?;
    if a_plus.is_zero() {
        return Ok(Domination::AnyTheta);
    }
    let mut theta = 0.0f64;
    for (&p, &m) in a_plus.values().iter().zip(a_minus.values()) {
        if m > 0.0 {
            theta = theta.max(p / m);
        } else if p > TIE_TOLERANCE {
            return Ok(Domination::None);
        }
    }
    Ok(Domination::Theta(theta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComparisonRegime {
    /// `Upsilon_theta` is empty: `a+ <= theta a-`.
    Dominated,
    NonDominated,
}

/// Restricted masses over `Upsilon_theta = {a+ > theta a-}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelComparison {
    pub theta: f64,
    pub upsilon_measure: f64,
    pub f_plus: f64,
    pub f_minus: f64,
    pub g: f64,
    pub regime: ComparisonRegime,
}

pub fn g_function(
    a_plus: &GridKernel,
    a_minus: &GridKernel,
    theta: f64,
) -> Result<KernelComparison> {
    check_pair(a_plus, a_minus)?;
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::param(
            "certify.theta",
            format!("must be > 0, got {theta}"),
        ));
    }
    let h = a_plus.domain().cell_volume();
    let (mut count, mut fp, mut fm) = (0usize, 0.0, 0.0);
    for (&p, &m) in a_plus.values().iter().zip(a_minus.values()) {
        if p > theta * m + TIE_TOLERANCE {
            count += 1;
            fp += p;
            fm += m;
        }
    }
    let (f_plus, f_minus) = (fp * h, fm * h);
    Ok(KernelComparison {
        theta,
        upsilon_measure: count as f64 * h,
        f_plus,
        f_minus,
        g: f_plus - theta * f_minus,
        regime: if count == 0 {
            ComparisonRegime::Dominated
        } else {
            ComparisonRegime::NonDominated
        },
    })
}

/// Continuum `g(theta)` for `a+ = alpha 1_{B_R}`, `a- = beta 1_{B_r}`.
pub fn g_closed_form_balls(a_plus: &KernelSpec, a_minus: &KernelSpec, theta: f64) -> Option<f64> {
    let (
        KernelShape::BallIndicator {
            amplitude: alpha,
            radius: big_r,
        },
        KernelShape::BallIndicator {
            amplitude: beta,
            radius: r,
        },
    ) = (a_plus.shape(), a_minus.shape())
    else {
        return None;
    };
    let vol = |rad: f64| {
        KernelSpec::ball(1.0, rad, a_plus.dim())
            .map(|k| k.stats().mass)
            .unwrap_or(0.0)
    };
    let (vr_big, vr) = (vol(*big_r), vol(*r));
    let below = theta * beta < *alpha;
    Some(if big_r > r {
        if below {
            alpha * vr_big - theta * beta * vr
        } else {
            alpha * (vr_big - vr)
        }
    } else if below {
        (alpha - theta * beta) * vr_big
    } else {
        0.0
    })
}

/// `int_{Upsilon_inf} a+` with `Upsilon_inf = {a- = 0}`.
pub fn upsilon_infinity_mass(a_plus: &GridKernel, a_minus: &GridKernel) -> Result<f64> {
    check_pair(a_plus, a_minus)?;
    let h = a_plus.domain().cell_volume();
    Ok(a_plus
        .values()
        .iter()
        .zip(a_minus.values())
        .filter(|(_, &m)| m < TIE_TOLERANCE)
        .map(|(p, _)| p)
        .sum::<f64>()
        * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{periodize, TorusDomain};
    use proptest::prelude::*;

    fn grid(k: &KernelSpec, m: usize) -> GridKernel {
        periodize(k, &TorusDomain::new(k.dim(), 20.0, m).unwrap()).unwrap()
    }

    #[test]
    fn domination_examples() {
        let g = KernelSpec::gaussian(1.0, 1.0, 1).unwrap();
        let (p, m) = (grid(&g.scaled(2.0).unwrap(), 64), grid(&g, 64));
        match domination_theta(&p, &m).unwrap() {
            Domination::Theta(t) => assert!((t - 2.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        let bp = grid(&KernelSpec::ball(1.0, 2.05, 1).unwrap(), 64);
        let bm = grid(&KernelSpec::ball(1.0, 1.05, 1).unwrap(), 64);
        assert_eq!(domination_theta(&bp, &bm).unwrap(), Domination::None);
        let z = grid(&KernelSpec::zero(1).unwrap(), 64);
        assert_eq!(domination_theta(&z, &bm).unwrap(), Domination::AnyTheta);
    }

    #[test]
    fn closed_form_examples() {
        let ap = KernelSpec::ball(1.0, 2.0, 1).unwrap();
        let am = KernelSpec::ball(1.0, 1.0, 1).unwrap();
        assert!((g_closed_form_balls(&ap, &am, 0.5).unwrap() - 3.0).abs() < 1e-14);
        assert!((g_closed_form_balls(&ap, &am, 2.0).unwrap() - 2.0).abs() < 1e-14);
        let wide = KernelSpec::ball(1.0, 3.0, 1).unwrap();
        assert_eq!(g_closed_form_balls(&ap, &wide, 2.0).unwrap(), 0.0);
        assert!(
            g_closed_form_balls(&KernelSpec::gaussian(1.0, 1.0, 1).unwrap(), &am, 1.0).is_none()
        );
    }

    #[test]
    fn grid_matches_closed_form() {
        for dim in [1, 2] {
            let m = if dim == 1 { 512 } else { 128 };
            let ap = KernelSpec::ball(1.5, 2.0, dim).unwrap();
            let am = KernelSpec::ball(2.0, 1.0, dim).unwrap();
            let (gp, gm) = (grid(&ap, m), grid(&am, m));
            let h = gp.domain().spacing();
            for theta in [0.3, 0.7, 1.0, 3.0] {
                let grid_g = g_function(&gp, &gm, theta).unwrap().g;
                let exact = g_closed_form_balls(&ap, &am, theta).unwrap();
                // boundary cells of both balls
                let boundary = if dim == 1 {
                    4.0
                } else {
                    2.0 * std::f64::consts::PI * 3.0 / h * 2.0
                };
                let tol = 2.0 * 2.0 * theta.max(1.0) * gp.domain().cell_volume() * boundary;
                assert!(
                    (grid_g - exact).abs() <= tol,
                    "d={dim} theta={theta}: {grid_g} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn dominated_gives_zero() {
        let am = grid(&KernelSpec::gaussian(1.0, 1.0, 1).unwrap(), 64);
        let ap = grid(&KernelSpec::gaussian(0.5, 1.0, 1).unwrap(), 64);
        let c = g_function(&ap, &am, 1.0).unwrap();
        assert_eq!(c.regime, ComparisonRegime::Dominated);
        assert_eq!(c.g, 0.0);
        assert_eq!(c.upsilon_measure, 0.0);
    }

    #[test]
    fn upsilon_infinity() {
        let ap = grid(&KernelSpec::ball(1.0, 2.05, 1).unwrap(), 64);
        let z = grid(&KernelSpec::zero(1).unwrap(), 64);
        assert!((upsilon_infinity_mass(&ap, &z).unwrap() - ap.discrete_mass()).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn case_ii_properties(t1 in 0.05f64..5.0, t2 in 0.05f64..5.0) {
            let ap = grid(&KernelSpec::ball(1.2, 2.05, 1).unwrap(), 128);
            let am = grid(&KernelSpec::gaussian(2.0, 0.5, 1).unwrap().scaled(1.0).unwrap(), 128);
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            let (a, b) = (g_function(&ap, &am, lo).unwrap(), g_function(&ap, &am, hi).unwrap());
            prop_assert!(b.f_plus <= a.f_plus && b.f_minus <= a.f_minus);
            prop_assert!(a.g > 0.0 && b.g > 0.0);
            prop_assert!(a.f_minus < a.f_plus / lo);
        }
    }
}
