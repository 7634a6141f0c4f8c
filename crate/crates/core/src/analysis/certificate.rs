use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

use super::comparison::{
    domination_theta, g_closed_form_balls, g_function, upsilon_infinity_mass, Domination,
    TIE_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::io::sha256_file;
use crate::kernels::KernelShape;
use crate::kinetic::{BernoulliSolution, Trajectory};
use crate::model::{GridModel, ModelParams};

/// Default headroom `delta` required of the initial data.
pub const DEFAULT_DELTA: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TheoremId {
    /// Bound under pointwise domination `a+ <= theta a-`.
    #[serde(rename = "K2tm")]
    Domination,
    /// Bound under `g(theta) < m`.
    #[serde(rename = "350tm")]
    GlobalBound,
    /// Homogenization sandwich between two homogeneous solutions.
    #[serde(rename = "K4tm")]
    Homogenization,
    /// `int_{a- = 0} a+ < m`.
    #[serde(rename = "globally")]
    FiniteRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    HypothesesHold,
    HypothesesFail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Conclusion {
    NotChecked,
    /// Hypotheses failed, so the trajectory was not examined.
    Skipped,
    Verified {
        worst_margin: f64,
    },
    Violated {
        t: f64,
        index: usize,
        margin: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRef {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremCertificate {
    pub theorem: TheoremId,
    pub values: BTreeMap<String, f64>,
    pub checks: BTreeMap<String, bool>,
    pub verdict: Verdict,
    pub conclusion: Conclusion,
    /// `sup_x rho_t` observed over the checked trajectory.
    pub observed_sup: Option<f64>,
    /// `(t, sup_x |rho_t - q|)`, for the homogenization check.
    pub decay: Option<Vec<(f64, f64)>>,
    pub trajectory: Option<TrajectoryRef>,
}

impl TheoremCertificate {
    fn new(theorem: TheoremId) -> Self {
        Self {
            theorem,
            values: BTreeMap::new(),
            checks: BTreeMap::new(),
            verdict: Verdict::HypothesesFail,
            conclusion: Conclusion::NotChecked,
            observed_sup: None,
            decay: None,
            trajectory: None,
        }
    }

    fn value(mut self, k: &str, v: f64) -> Self {
        self.values.insert(k.into(), v);
        self
    }

    fn check(mut self, k: &str, ok: bool) -> Self {
        self.checks.insert(k.into(), ok);
        self
    }

    fn settle(mut self) -> Self {
        self.verdict = if self.checks.values().all(|&b| b) {
            Verdict::HypothesesHold
        } else {
            Verdict::HypothesesFail
        };
        self
    }

    pub fn hypotheses_hold(&self) -> bool {
        self.verdict == Verdict::HypothesesHold
    }

    pub fn is_violated(&self) -> bool {
        matches!(self.conclusion, Conclusion::Violated { .. })
    }

    /// A certificate whose hypotheses hold but whose conclusion failed.
    pub fn ensure_sound(&self) -> Result<()> {
        if self.hypotheses_hold() && self.is_violated() {
            Err(Error::CertificateViolated(format!(
                "{:?}: {:?}",
                self.theorem, self.conclusion
            )))
        } else {
            Ok(())
        }
    }

    /// Record the file the checked trajectory was written to.
    pub fn attach_trajectory(&mut self, path: &Path) -> Result<()> {
        self.trajectory = Some(TrajectoryRef {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }
}

/// Pointwise domination `a+ <= theta a-` on the grid.
pub fn certify_domination(model: &GridModel, theta: f64) -> Result<TheoremCertificate> {
    let dom = domination_theta(&model.a_plus, &model.a_minus)?;
    let mut c = TheoremCertificate::new(TheoremId::Domination)
        .value("theta", theta)
        .value("m", model.mortality)
        .value("a_plus_mass", model.plus_mass())
        .value("a_minus_mass", model.minus_mass());
    if let Some(t) = dom.theta() {
        c = c.value("theta_min", t);
    }
    let ok = theta > 0.0 && matches!(dom.theta(), Some(t) if t <= theta);
    Ok(c.check("a_plus_le_theta_a_minus", ok).settle())
}

/// `g(theta) < m`, evaluated on the grid; ball pairs also get the closed form.
pub fn certify_global_bound(
    params: &ModelParams,
    model: &GridModel,
    theta: f64,
) -> Result<TheoremCertificate> {
    let cmp = g_function(&model.a_plus, &model.a_minus, theta)?;
    let mut c = TheoremCertificate::new(TheoremId::GlobalBound)
        .value("theta", theta)
        .value("m", model.mortality)
        .value("g_grid", cmp.g)
        .value("f_plus", cmp.f_plus)
        .value("f_minus", cmp.f_minus)
        .value("upsilon_measure", cmp.upsilon_measure)
        .check("g_below_m", cmp.g < model.mortality);
    if let Some(g) = g_closed_form_balls(&params.a_plus, &params.a_minus, theta) {
        c = c.value("g_closed_form", g);
    }
    if params.a_minus.support_radius().is_some() {
        c = c.value(
            "upsilon_infinity_plus_mass",
            upsilon_infinity_mass(&model.a_plus, &model.a_minus)?,
        );
    }
    if let (
        KernelShape::BallIndicator {
            amplitude: alpha,
            radius: r_big,
        },
        KernelShape::BallIndicator { radius: r, .. },
    ) = (params.a_plus.shape(), params.a_minus.shape())
    {
        let vol = |rad: f64| {
            crate::kernels::KernelSpec::ball(1.0, rad, params.dim())
                .map(|k| k.stats().mass)
                .unwrap_or(0.0)
        };
        let lhs = alpha * (vol(*r_big) - vol(*r));
        c = c.value("ball_annulus_mass", lhs);
    }
    Ok(c.settle())
}

/// `int_{a- = 0} a+ < m` for competition of finite range.
pub fn certify_globally(params: &ModelParams, model: &GridModel) -> Result<TheoremCertificate> {
    let mass = upsilon_infinity_mass(&model.a_plus, &model.a_minus)?;
    Ok(TheoremCertificate::new(TheoremId::FiniteRange)
        .value("m", model.mortality)
        .value("upsilon_infinity_plus_mass", mass)
        .check("finite_range", params.a_minus.support_radius().is_some())
        .check("mass_below_m", mass < model.mortality)
        .settle())
}

/// Check `rho_0 <= theta - delta` and then `sup_x rho_t <= theta` at every stored time.
pub fn verify_bound_on_trajectory(
    traj: &Trajectory,
    cert: &TheoremCertificate,
    delta: f64,
) -> Result<TheoremCertificate> {
    if !matches!(cert.theorem, TheoremId::Domination | TheoremId::GlobalBound) {
        return Err(Error::param(
            "certify.theorem",
            "bound check applies to the domination and global-bound results",
        ));
    }
    let theta = *cert
        .values
        .get("theta")
        .ok_or_else(|| Error::param("certify.theta", "certificate carries no theta"))?;
    let rho0 = &traj.fields[0];
    let mut out = cert
        .clone()
        .value("delta", delta)
        .value("initial_sup", rho0.sup())
        .check("initial_headroom", rho0.sup() <= theta - delta)
        .settle();
    out.observed_sup = Some(traj.fields.iter().map(|f| f.sup()).fold(0.0, f64::max));
    if !out.hypotheses_hold() {
        out.conclusion = Conclusion::Skipped;
        return Ok(out);
    }
    let mut worst = f64::INFINITY;
    for (t, f) in traj.times.iter().zip(&traj.fields) {
        for (i, &v) in f.values().iter().enumerate() {
            let margin = theta - v;
            if margin < 0.0 {
                out.conclusion = Conclusion::Violated {
                    t: *t,
                    index: i,
                    margin,
                };
                return Ok(out);
            }
            worst = worst.min(margin);
        }
    }
    out.conclusion = Conclusion::Verified {
        worst_margin: worst,
    };
    Ok(out)
}

/// Homogenization: `psi^-_t < rho_t(x) < psi^+_t` with `psi^{+-}` the
/// homogeneous solutions started at `kappa^{+-}`.
pub fn k4_sandwich(
    traj: &Trajectory,
    model: &GridModel,
    kappa_minus: f64,
    kappa_plus: f64,
) -> Result<TheoremCertificate> {
    let (ap, am, m) = (model.plus_mass(), model.minus_mass(), model.mortality);
    let q = if am > 0.0 {
        (ap - m) / am
    } else {
        f64::INFINITY
    };
    let dominated_below = model
        .a_plus
        .values()
        .iter()
        .zip(model.a_minus.values())
        .all(|(&p, &n)| p + TIE_TOLERANCE >= kappa_plus * n);
    // a+/<a+> >= (1 - m/<a+>) a-/<a->, homogeneous of degree 0 in a-.
    let normalized = ap > 0.0
        && am > 0.0
        && model
            .a_plus
            .values()
            .iter()
            .zip(model.a_minus.values())
            .all(|(&p, &n)| p / ap + TIE_TOLERANCE >= (1.0 - m / ap) * n / am);
    let rho0 = &traj.fields[0];
    let mut c = TheoremCertificate::new(TheoremId::Homogenization)
        .value("q", q)
        .value("m", m)
        .value("kappa_minus", kappa_minus)
        .value("kappa_plus", kappa_plus)
        .value("a_plus_mass", ap)
        .value("a_minus_mass", am)
        .check("q_positive", q > 0.0 && q.is_finite())
        .check("a_plus_ge_kappa_plus_a_minus", dominated_below)
        .check("kappa_plus_above_q", kappa_plus > q)
        .check("kappa_minus_in_0_q", kappa_minus > 0.0 && kappa_minus < q)
        .check(
            "initial_inside_band",
            rho0.min() > kappa_minus && rho0.max() < kappa_plus,
        )
        .check("normalized_kernel_condition", normalized)
        .settle();
    c.observed_sup = Some(traj.fields.iter().map(|f| f.sup()).fold(0.0, f64::max));
    if q.is_finite() {
        c.decay = Some(
            traj.times
                .iter()
                .zip(&traj.fields)
                .map(|(t, f)| {
                    (
                        *t,
                        f.values().iter().map(|v| (v - q).abs()).fold(0.0, f64::max),
                    )
                })
                .collect(),
        );
    }
    if !c.hypotheses_hold() {
        c.conclusion = Conclusion::Skipped;
        return Ok(c);
    }
    let lower = BernoulliSolution::new(kappa_minus, m, ap, am)?;
    let upper = BernoulliSolution::new(kappa_plus, m, ap, am)?;
    let mut worst = f64::INFINITY;
    for (t, f) in traj.times.iter().zip(&traj.fields) {
        let (lo, hi) = (lower.at(*t), upper.at(*t));
        for (i, &v) in f.values().iter().enumerate() {
            let margin = (v - lo).min(hi - v);
            if margin <= 0.0 {
                c.conclusion = Conclusion::Violated {
                    t: *t,
                    index: i,
                    margin,
                };
                return Ok(c);
            }
            worst = worst.min(margin);
        }
    }
    c.conclusion = Conclusion::Verified {
        worst_margin: worst,
    };
    Ok(c)
}

impl Domination {
    /// Whether `theta` satisfies the domination hypothesis.
    pub fn admits(&self, theta: f64) -> bool {
        matches!(self.theta(), Some(t) if t <= theta)
    }
}
