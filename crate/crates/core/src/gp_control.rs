//! GP-tightened CLF/CBF conditions: uncertainty margins, probabilistic
//! compatibility, the GP universal formula, the stability-relaxed formula
//! and projection onto input limits.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::clf_cbf::{
    cbf_terms, clf_terms, compatibility_from_levels, universal_from_levels, CbfSpec, CbfTerms,
    ClfSpec, ClfTerms, Compatibility, ControlDecision, Region, RegionTests,
};
use crate::dynamics::{check_dim, check_finite, ControlAffineSystem, ControlOutput, Controller, Vector};
use crate::error::{Error, Result};
use crate::gp::GpPosterior;

/// How the per-coordinate confidence intervals enter the margins.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarginMode {
    /// `Σᵢ βᵢ|∇ᵢ|σᵢ`.
    #[default]
    Elementwise,
    /// `maxᵢ βᵢ · ‖∇‖ · ‖σ‖`, the looser norm-product form.
    CauchySchwarz,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyMargins {
    /// `Δ_V`, added to `a`.
    pub delta_v: f64,
    /// `Δ_h`, added to `c`.
    pub delta_h: f64,
    /// `βᵢ|∇Vᵢ|σᵢ`.
    pub clf_contributions: Vector,
    /// `βᵢ|∇hᵢ|σᵢ`.
    pub cbf_contributions: Vector,
}

impl UncertaintyMargins {
    pub fn zero(n: usize) -> Self {
        Self {
            delta_v: 0.0,
            delta_h: 0.0,
            clf_contributions: Vector::zeros(n),
            cbf_contributions: Vector::zeros(n),
        }
    }

    /// Margins from gradients and a GP prediction.
    pub fn from_prediction(
        grad_v: &Vector,
        grad_h: &Vector,
        mean: &Vector,
        std: &Vector,
        beta: &Vector,
        mode: MarginMode,
    ) -> Result<Self> {
        let n = mean.len();
        for (ctx, len) in [
            ("CLF gradient", grad_v.len()),
            ("CBF gradient", grad_h.len()),
            ("posterior std", std.len()),
            ("beta", beta.len()),
        ] {
            check_dim(ctx, n, len)?;
        }
        if beta.iter().any(|b| !(*b >= 0.0)) {
            return Err(Error::Precondition("beta must be non-negative".into()));
        }
        let contrib = |grad: &Vector| {
            Vector::from_iterator(n, (0..n).map(|i| beta[i] * grad[i].abs() * std[i]))
        };
        let clf_contributions = contrib(grad_v);
        let cbf_contributions = contrib(grad_h);
        let (spread_v, spread_h) = match mode {
            MarginMode::Elementwise => (clf_contributions.sum(), cbf_contributions.sum()),
            MarginMode::CauchySchwarz => {
                let b = beta.max();
                (b * grad_v.norm() * std.norm(), b * grad_h.norm() * std.norm())
            }
        };
        let delta_v = grad_v.dot(mean) + spread_v;
        let delta_h = grad_h.dot(mean) - spread_h;
        check_finite("uncertainty margins", [delta_v, delta_h].iter())?;
        Ok(Self {
            delta_v,
            delta_h,
            clf_contributions,
            cbf_contributions,
        })
    }
}

pub fn uncertainty_margins(
    clf: &ClfSpec,
    cbf: &CbfSpec,
    posterior: &GpPosterior,
    beta: &Vector,
    x: &Vector,
    mode: MarginMode,
) -> Result<UncertaintyMargins> {
    let (mean, std) = posterior.predict(x)?;
    UncertaintyMargins::from_prediction(&clf.gradient(x)?, &cbf.gradient(x)?, &mean, &std, beta, mode)
}

/// Compatibility of the tightened conditions plus the two shift conditions
/// of the sufficient test on `Δ_V`, `Δ_h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilisticCompatibility {
    /// Status of the tightened pair, decided on `ṽ`, `w̃`.
    pub status: Compatibility,
    /// `ṽ = v + Δ_V·dᵀb − Δ_h·bᵀb`.
    pub v_tilde: f64,
    /// `w̃ = w + Δ_V·dᵀd − Δ_h·bᵀd`.
    pub w_tilde: f64,
    /// `Δ_V·dᵀb − Δ_h·bᵀb ≥ 0`.
    pub clf_shift_nonnegative: bool,
    /// `Δ_V·dᵀd − Δ_h·bᵀd ≥ 0`.
    pub cbf_shift_nonnegative: bool,
}

pub fn probabilistic_compatibility(
    clf: &ClfTerms,
    cbf: &CbfTerms,
    margins: &UncertaintyMargins,
    kappa: f64,
    rho: f64,
) -> Result<ProbabilisticCompatibility> {
    let (clf_level, cbf_level) = tightened_levels(clf, cbf, margins, kappa, rho);
    let status = compatibility_from_levels(&clf.b, &cbf.d, clf_level, cbf_level)?;
    let tests = RegionTests::new(&clf.b, &cbf.d, clf_level, cbf_level, 0.0);
    let shift_v = margins.delta_v * tests.bd - margins.delta_h * tests.bb;
    let shift_w = margins.delta_v * tests.dd - margins.delta_h * tests.bd;
    Ok(ProbabilisticCompatibility {
        status,
        v_tilde: tests.v,
        w_tilde: tests.w,
        clf_shift_nonnegative: shift_v >= 0.0,
        cbf_shift_nonnegative: shift_w >= 0.0,
    })
}

/// `(ã + κζ, c̃ − ρΓ)`. The shaping terms `ζ`, `Γ` stay nominal.
fn tightened_levels(
    clf: &ClfTerms,
    cbf: &CbfTerms,
    margins: &UncertaintyMargins,
    kappa: f64,
    rho: f64,
) -> (f64, f64) {
    (
        clf.a + margins.delta_v + kappa * clf.zeta,
        cbf.c + margins.delta_h - rho * cbf.gamma,
    )
}

/// The universal formula on the tightened terms `a + Δ_V`, `c + Δ_h`.
pub fn gp_universal_formula(
    clf: &ClfTerms,
    cbf: &CbfTerms,
    margins: &UncertaintyMargins,
    kappa: f64,
    rho: f64,
) -> Result<ControlDecision> {
    let (clf_level, cbf_level) = tightened_levels(clf, cbf, margins, kappa, rho);
    universal_from_levels(&clf.b, &cbf.d, clf_level, cbf_level)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedDecision {
    pub u: Vector,
    /// `χ ≥ 0`, the stability slack.
    pub slack: f64,
    pub region: Region,
    /// `ã + b·u + κζ`; positive when stability is given up.
    pub clf_margin: f64,
    /// `c̃ + d·u − ρΓ`; never negative.
    pub cbf_margin: f64,
    pub tests: RegionTests,
}

/// Exact minimizer of `½(‖u‖² + χ²/m)` subject to `ã + b·u ≤ −κζ + χ` and
/// `c̃ + d·u ≥ ρΓ`.
pub fn relaxed_universal_formula(
    clf: &ClfTerms,
    cbf: &CbfTerms,
    margins: &UncertaintyMargins,
    kappa: f64,
    rho: f64,
    m_weight: f64,
) -> Result<RelaxedDecision> {
    if !(m_weight > 0.0 && m_weight.is_finite()) {
        return Err(Error::Precondition(format!("slack weight m must be positive, got {m_weight}")));
    }
    check_dim("CBF row", clf.b.len(), cbf.d.len())?;
    let (clf_level, cbf_level) = tightened_levels(clf, cbf, margins, kappa, rho);
    relaxed_from_levels(&clf.b, &cbf.d, clf_level, cbf_level, m_weight)
}

pub(crate) fn relaxed_from_levels(
    b: &Vector,
    d: &Vector,
    clf_level: f64,
    cbf_level: f64,
    m_weight: f64,
) -> Result<RelaxedDecision> {
    if d.iter().all(|&e| e == 0.0) && cbf_level < 0.0 {
        return Err(Error::InfeasibleSafety { cbf_level });
    }
    // χ = m·λ1 eliminated: the CLF row behaves like one with ‖b‖² + m
    let tests = RegionTests::new(b, d, clf_level, cbf_level, m_weight);
    let active = tests.classify().ok_or(Error::DegenerateGeometry {
        determinant: tests.determinant(),
    })?;
    let (l1, l2) = tests.multipliers(active);
    let u = b * (-l1) + d * l2;
    Ok(RelaxedDecision {
        clf_margin: clf_level + b.dot(&u),
        cbf_margin: cbf_level + d.dot(&u),
        slack: (m_weight * l1).max(0.0),
        region: Region::relaxed(active),
        u,
        tests,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlLimits {
    pub lower: Vector,
    pub upper: Vector,
}

impl ControlLimits {
    pub fn new(lower: Vector, upper: Vector) -> Result<Self> {
        check_dim("control limits", lower.len(), upper.len())?;
        if lower.iter().zip(upper.iter()).any(|(l, u)| !(l <= u)) {
            return Err(Error::Precondition("control limits need lower ≤ upper".into()));
        }
        Ok(Self { lower, upper })
    }

    /// `[−bound, bound]` in every coordinate.
    pub fn symmetric(m: usize, bound: f64) -> Result<Self> {
        Self::new(Vector::from_element(m, -bound), Vector::from_element(m, bound))
    }
}

/// Nearest point of the box, i.e. a componentwise clamp.
pub fn project_to_box(u: &Vector, limits: &ControlLimits) -> Vector {
    u.zip_zip_map(&limits.lower, &limits.upper, |v, lo, hi| v.clamp(lo, hi))
}

/// Which closed-form law the controller evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ControlLaw {
    /// Hard universal formula; fails at incompatible points.
    Universal,
    /// Stability-relaxed formula with slack weight `m`.
    Relaxed { m_weight: f64 },
}

/// GP ingredients of a [`SafeController`].
#[derive(Debug, Clone)]
pub struct GpCorrection {
    pub posterior: Arc<GpPosterior>,
    pub beta: Vector,
    pub mode: MarginMode,
}

/// State feedback built from a nominal model, a CLF/CBF pair, an optional
/// GP correction and optional input limits.
#[derive(Debug, Clone)]
pub struct SafeController {
    pub nominal: ControlAffineSystem,
    pub clf: ClfSpec,
    pub cbf: CbfSpec,
    pub law: ControlLaw,
    pub gp: Option<GpCorrection>,
    pub limits: Option<ControlLimits>,
}

impl SafeController {
    pub fn new(nominal: ControlAffineSystem, clf: ClfSpec, cbf: CbfSpec, law: ControlLaw) -> Self {
        Self {
            nominal,
            clf,
            cbf,
            law,
            gp: None,
            limits: None,
        }
    }

    pub fn with_gp(mut self, gp: GpCorrection) -> Self {
        self.gp = Some(gp);
        self
    }

    pub fn with_limits(mut self, limits: ControlLimits) -> Self {
        self.limits = Some(limits);
        self
    }

    /// Unprojected decision at `(x, t)` with the margins it used.
    pub fn decide(&self, x: &Vector, t: f64) -> Result<(Vector, Region, UncertaintyMargins)> {
        let clf = clf_terms(&self.clf, &self.nominal, x, t)?;
        let cbf = cbf_terms(&self.cbf, &self.nominal, x, t)?;
        let margins = match &self.gp {
            Some(gp) => uncertainty_margins(&self.clf, &self.cbf, &gp.posterior, &gp.beta, x, gp.mode)?,
            None => UncertaintyMargins::zero(x.len()),
        };
        let (kappa, rho) = (self.clf.kappa, self.cbf.rho);
        let (u, region) = match self.law {
            ControlLaw::Universal => {
                let d = gp_universal_formula(&clf, &cbf, &margins, kappa, rho)?;
                (d.u, d.region)
            }
            ControlLaw::Relaxed { m_weight } => {
                let d = relaxed_universal_formula(&clf, &cbf, &margins, kappa, rho, m_weight)?;
                (d.u, d.region)
            }
        };
        Ok((u, region, margins))
    }
}

impl Controller for SafeController {
    fn control(&self, x: &Vector, t: f64) -> Result<ControlOutput> {
        let (u, region, margins) = self.decide(x, t)?;
        let u = match &self.limits {
            Some(limits) => project_to_box(&u, limits),
            None => u,
        };
        Ok(ControlOutput {
            u,
            clf_value: self.clf.value(x),
            cbf_value: self.cbf.value(x),
            region: Some(region),
            delta_v: margins.delta_v,
            delta_h: margins.delta_h,
        })
    }
}
