//! CLF/CBF terms, the single-objective universal formulas, the
//! compatibility test and the generalized (min-norm) universal formula.
//!
//! Notation used throughout:
//!
//! * CLF condition `a + b·u ≤ −κζ`, with `a = ∇V·f + λV`, `b = ∇V·g`,
//!   `ζ = sqrt(a² + φ‖b‖⁴)`.
//! * CBF condition `c + d·u ≥ ρΓ`, with `c = ∇h·f + βh`, `d = ∇h·g`,
//!   `Γ = sqrt(c² + ϕ‖d‖⁴)`.
//!
//! The controllers below work with the two *levels* `A = a + κζ` and
//! `C = c − ρΓ`, so that the conditions read `b·u ≤ −A` and `d·u ≥ −C`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamics::{check_dim, check_finite, ControlAffineSystem, Vector};
use crate::error::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;

/// Relative tolerance on `|b·d|/(‖b‖‖d‖)` below which the two constraint
/// hyperplanes are treated as parallel.
pub const PARALLEL_TOLERANCE: f64 = 1e-9;

/// Control Lyapunov function with its shaping constants.
#[derive(Clone)]
pub struct ClfSpec {
    value: ScalarFn,
    gradient: GradientFn,
    /// Decay rate in `a = L_f V + λV`.
    pub lambda: f64,
    /// Weight of `ζ` in the tightened decrease condition.
    pub kappa: f64,
    phi: ScalarFn,
}

impl ClfSpec {
    /// Builds a CLF with `φ ≡ 1`.
    pub fn new(
        value: impl Fn(&Vector) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
        lambda: f64,
        kappa: f64,
    ) -> Self {
        Self {
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            lambda,
            kappa,
            phi: Arc::new(|_| 1.0),
        }
    }

    pub fn with_phi(mut self, phi: impl Fn(&Vector) -> f64 + Send + Sync + 'static) -> Self {
        self.phi = Arc::new(phi);
        self
    }

    pub fn value(&self, x: &Vector) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &Vector) -> Result<Vector> {
        let g = (self.gradient)(x);
        check_dim("CLF gradient", x.len(), g.len())?;
        check_finite("CLF gradient", g.iter())?;
        Ok(g)
    }

    pub fn phi(&self, x: &Vector) -> f64 {
        (self.phi)(x)
    }
}

impl fmt::Debug for ClfSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClfSpec")
            .field("lambda", &self.lambda)
            .field("kappa", &self.kappa)
            .finish_non_exhaustive()
    }
}

/// Control barrier function with its shaping constants. The safe set is
/// `{x : h(x) ≥ 0}`.
#[derive(Clone)]
pub struct CbfSpec {
    value: ScalarFn,
    gradient: GradientFn,
    /// Class-K slope in `c = L_f h + βh`.
    pub beta: f64,
    /// Weight of `Γ` in the tightened barrier condition.
    pub rho: f64,
    varphi: ScalarFn,
}

impl CbfSpec {
    /// Builds a CBF with `ϕ ≡ 1`.
    pub fn new(
        value: impl Fn(&Vector) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
        beta: f64,
        rho: f64,
    ) -> Self {
        Self {
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            beta,
            rho,
            varphi: Arc::new(|_| 1.0),
        }
    }

    pub fn with_varphi(mut self, varphi: impl Fn(&Vector) -> f64 + Send + Sync + 'static) -> Self {
        self.varphi = Arc::new(varphi);
        self
    }

    pub fn value(&self, x: &Vector) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &Vector) -> Result<Vector> {
        let g = (self.gradient)(x);
        check_dim("CBF gradient", x.len(), g.len())?;
        check_finite("CBF gradient", g.iter())?;
        Ok(g)
    }

    pub fn varphi(&self, x: &Vector) -> f64 {
        (self.varphi)(x)
    }
}

impl fmt::Debug for CbfSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CbfSpec")
            .field("beta", &self.beta)
            .field("rho", &self.rho)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClfTerms {
    pub a: f64,
    pub b: Vector,
    pub zeta: f64,
}

impl ClfTerms {
    /// Assembles terms from `a`, `b` and the value of `φ` at the state.
    pub fn from_parts(a: f64, b: Vector, phi: f64) -> Self {
        let zeta = shaping(a, &b, phi);
        Self { a, b, zeta }
    }

    /// `a + κζ`.
    pub fn level(&self, kappa: f64) -> f64 {
        self.a + kappa * self.zeta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CbfTerms {
    pub c: f64,
    pub d: Vector,
    pub gamma: f64,
}

impl CbfTerms {
    /// Assembles terms from `c`, `d` and the value of `ϕ` at the state.
    pub fn from_parts(c: f64, d: Vector, varphi: f64) -> Self {
        let gamma = shaping(c, &d, varphi);
        Self { c, d, gamma }
    }

    /// `c − ρΓ`.
    pub fn level(&self, rho: f64) -> f64 {
        self.c - rho * self.gamma
    }
}

fn shaping(scalar: f64, row: &Vector, weight: f64) -> f64 {
    let sq = row.norm_squared();
    (scalar * scalar + weight * sq * sq).sqrt()
}

pub fn clf_terms(clf: &ClfSpec, system: &ControlAffineSystem, x: &Vector, t: f64) -> Result<ClfTerms> {
    let grad = clf.gradient(x)?;
    let f = system.drift(x, t)?;
    let g = system.input_map(x)?;
    let a = grad.dot(&f) + clf.lambda * clf.value(x);
    let b = g.tr_mul(&grad);
    Ok(ClfTerms::from_parts(a, b, clf.phi(x)))
}

pub fn cbf_terms(cbf: &CbfSpec, system: &ControlAffineSystem, x: &Vector, t: f64) -> Result<CbfTerms> {
    let grad = cbf.gradient(x)?;
    let f = system.drift(x, t)?;
    let g = system.input_map(x)?;
    let c = grad.dot(&f) + cbf.beta * cbf.value(x);
    let d = g.tr_mul(&grad);
    Ok(CbfTerms::from_parts(c, d, cbf.varphi(x)))
}

fn is_zero(v: &Vector) -> bool {
    v.iter().all(|&e| e == 0.0)
}

/// Sontag-type universal formula for the CLF alone.
pub fn sontag_clf_control(terms: &ClfTerms, kappa: f64) -> Vector {
    if is_zero(&terms.b) {
        return Vector::zeros(terms.b.len());
    }
    let scale = -terms.level(kappa) / terms.b.norm_squared();
    &terms.b * scale
}

/// Universal formula for the CBF alone.
pub fn cbf_universal_control(terms: &CbfTerms, rho: f64) -> Vector {
    if is_zero(&terms.d) {
        return Vector::zeros(terms.d.len());
    }
    let scale = -terms.level(rho) / terms.d.norm_squared();
    &terms.d * scale
}

/// Pointwise compatibility of the CLF and CBF conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Compatibility {
    /// Non-parallel hyperplanes always intersect.
    NonParallel,
    /// Parallel rows and `v ≤ 0`: the CLF-only law satisfies the barrier.
    ParallelVOk,
    /// Parallel rows and `w ≤ 0`: the CBF-only law satisfies the decrease condition.
    ParallelWOk,
    Incompatible,
}

impl Compatibility {
    pub fn is_compatible(self) -> bool {
        self != Compatibility::Incompatible
    }
}

/// Gram quantities of the constraint rows plus the `v`, `w` indicators.
///
/// `w = A·d·dᵀ − C·b·dᵀ`, `v = A·b·dᵀ − C·b·bᵀ`, where `A = a + κζ` and
/// `C = c − ρΓ`. `clf_extra` is added to `b·bᵀ` when a slack variable is
/// folded into the CLF row (zero for the hard problem).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionTests {
    pub clf_level: f64,
    pub cbf_level: f64,
    pub bb: f64,
    pub dd: f64,
    pub bd: f64,
    pub clf_extra: f64,
    /// `‖b‖²‖d‖² − (b·d)²`, summed from 2×2 minors to avoid cancellation.
    pub wedge: f64,
    pub v: f64,
    pub w: f64,
}

impl RegionTests {
    pub fn new(b: &Vector, d: &Vector, clf_level: f64, cbf_level: f64, clf_extra: f64) -> Self {
        let bb = b.norm_squared();
        let dd = d.norm_squared();
        let bd = b.dot(d);
        let bb_eff = bb + clf_extra;
        let mut wedge = 0.0;
        for i in 0..b.len() {
            for j in i + 1..b.len() {
                let minor = b[i] * d[j] - b[j] * d[i];
                wedge += minor * minor;
            }
        }
        Self {
            clf_level,
            cbf_level,
            bb,
            dd,
            bd,
            clf_extra,
            wedge,
            v: clf_level * bd - cbf_level * bb_eff,
            w: clf_level * dd - cbf_level * bd,
        }
    }

    /// `‖b dᵀ‖/(‖b‖‖d‖)` with the slack-augmented CLF row.
    pub fn alignment(&self) -> f64 {
        self.bd.abs() / ((self.bb + self.clf_extra) * self.dd).sqrt()
    }

    pub fn is_parallel(&self) -> bool {
        1.0 - self.alignment() <= PARALLEL_TOLERANCE
    }

    /// `(‖b‖² + extra)‖d‖² − (b·d)²`.
    pub fn determinant(&self) -> f64 {
        self.clf_extra * self.dd + self.wedge
    }

    /// Active-set classification. Boundaries are resolved in the order
    /// P4, P1, P2, P3; `None` means no branch applies (incompatible).
    pub fn classify(&self) -> Option<ActiveSet> {
        let (a, c) = (self.clf_level, self.cbf_level);
        if a <= 0.0 && c >= 0.0 {
            Some(ActiveSet::None)
        } else if a >= 0.0 && self.v <= 0.0 {
            Some(ActiveSet::Clf)
        } else if c <= 0.0 && self.w <= 0.0 {
            Some(ActiveSet::Cbf)
        } else if self.w >= 0.0 && self.v >= 0.0 && !self.is_parallel() {
            Some(ActiveSet::Both)
        } else {
            None
        }
    }

    /// KKT multipliers `(λ1, λ2)` for an active set; the control is
    /// `u = −λ1·bᵀ + λ2·dᵀ`.
    pub fn multipliers(&self, active: ActiveSet) -> (f64, f64) {
        match active {
            ActiveSet::None => (0.0, 0.0),
            ActiveSet::Clf => (self.clf_level / (self.bb + self.clf_extra), 0.0),
            ActiveSet::Cbf => (0.0, -self.cbf_level / self.dd),
            ActiveSet::Both => {
                let det = self.determinant();
                (self.w / det, self.v / det)
            }
        }
    }
}

/// Which constraints are active at the min-norm solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActiveSet {
    None,
    Clf,
    Cbf,
    Both,
}

/// Region label of a universal-formula decision. `P*` for the hard
/// formula, `Pbar*` for the slack-relaxed one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Region {
    P1,
    P2,
    P3,
    P4,
    Pbar1,
    Pbar2,
    Pbar3,
    Pbar4,
}

impl Region {
    pub const ALL: [Region; 8] = [
        Region::P1,
        Region::P2,
        Region::P3,
        Region::P4,
        Region::Pbar1,
        Region::Pbar2,
        Region::Pbar3,
        Region::Pbar4,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Region::P1 => "P1",
            Region::P2 => "P2",
            Region::P3 => "P3",
            Region::P4 => "P4",
            Region::Pbar1 => "Pbar1",
            Region::Pbar2 => "Pbar2",
            Region::Pbar3 => "Pbar3",
            Region::Pbar4 => "Pbar4",
        }
    }

    pub(crate) fn hard(active: ActiveSet) -> Self {
        match active {
            ActiveSet::Clf => Region::P1,
            ActiveSet::Cbf => Region::P2,
            ActiveSet::Both => Region::P3,
            ActiveSet::None => Region::P4,
        }
    }

    pub(crate) fn relaxed(active: ActiveSet) -> Self {
        match active {
            ActiveSet::Clf => Region::Pbar1,
            ActiveSet::Cbf => Region::Pbar2,
            ActiveSet::Both => Region::Pbar3,
            ActiveSet::None => Region::Pbar4,
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Region::ALL
            .into_iter()
            .find(|r| r.label() == s)
            .ok_or_else(|| Error::Domain(format!("unknown region label {s:?}")))
    }
}

/// Output of the generalized universal formula.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlDecision {
    pub u: Vector,
    pub region: Region,
    /// `(λ1, λ2)`; the P1/P2 ratios recover the blending weights of the
    /// compact form `u = ε1·m* + ε2·n*`.
    pub multipliers: Option<(f64, f64)>,
    /// `a + b·u + κζ`, non-positive when the CLF condition holds.
    pub clf_margin: f64,
    /// `c + d·u − ρΓ`, non-negative when the CBF condition holds.
    pub cbf_margin: f64,
    pub tests: RegionTests,
}

pub fn compatibility_status(
    clf: &ClfTerms,
    cbf: &CbfTerms,
    kappa: f64,
    rho: f64,
) -> Result<Compatibility> {
    compatibility_from_levels(&clf.b, &cbf.d, clf.level(kappa), cbf.level(rho))
}

pub(crate) fn compatibility_from_levels(
    b: &Vector,
    d: &Vector,
    clf_level: f64,
    cbf_level: f64,
) -> Result<Compatibility> {
    if is_zero(b) || is_zero(d) {
        return Err(Error::Precondition(
            "compatibility test needs non-zero b and d".into(),
        ));
    }
    check_dim("CBF row", b.len(), d.len())?;
    let tests = RegionTests::new(b, d, clf_level, cbf_level, 0.0);
    Ok(if !tests.is_parallel() {
        Compatibility::NonParallel
    } else if tests.v <= 0.0 {
        Compatibility::ParallelVOk
    } else if tests.w <= 0.0 {
        Compatibility::ParallelWOk
    } else {
        Compatibility::Incompatible
    })
}

/// Generalized universal formula: the min-norm input satisfying both the
/// CLF and the CBF condition, in closed form.
pub fn universal_formula(clf: &ClfTerms, cbf: &CbfTerms, kappa: f64, rho: f64) -> Result<ControlDecision> {
    universal_from_levels(&clf.b, &cbf.d, clf.level(kappa), cbf.level(rho))
}

/// Same as [`universal_formula`] but on precomputed levels `A`, `C`.
///
/// Rows that vanish are handled by dropping the constraint when it already
/// holds and failing otherwise.
pub fn universal_from_levels(b: &Vector, d: &Vector, clf_level: f64, cbf_level: f64) -> Result<ControlDecision> {
    check_dim("CBF row", b.len(), d.len())?;
    let tests = RegionTests::new(b, d, clf_level, cbf_level, 0.0);

    let active = if is_zero(b) && clf_level > 0.0 {
        return Err(Error::InfeasibleStability { clf_level });
    } else if is_zero(d) && cbf_level < 0.0 {
        return Err(Error::InfeasibleSafety { cbf_level });
    } else if is_zero(b) {
        if cbf_level >= 0.0 || is_zero(d) {
            ActiveSet::None
        } else {
            ActiveSet::Cbf
        }
    } else if is_zero(d) {
        if clf_level <= 0.0 {
            ActiveSet::None
        } else {
            ActiveSet::Clf
        }
    } else {
        match tests.classify() {
            Some(active) => active,
            None if tests.is_parallel() => {
                return Err(Error::Incompatible {
                    w: tests.w,
                    v: tests.v,
                })
            }
            None => {
                return Err(Error::DegenerateGeometry {
                    determinant: tests.determinant(),
                })
            }
        }
    };

    let (mut l1, mut l2) = tests.multipliers(active);
    let mut u = b * (-l1) + d * l2;
    if active == ActiveSet::Both {
        // nearly parallel rows give large cancelling multipliers; one step
        // of iterative refinement on the residuals restores both equalities
        let residual = RegionTests::new(b, d, clf_level + b.dot(&u), cbf_level + d.dot(&u), 0.0);
        let (r1, r2) = residual.multipliers(ActiveSet::Both);
        u += b * (-r1) + d * r2;
        l1 += r1;
        l2 += r2;
    }
    Ok(ControlDecision {
        clf_margin: clf_level + b.dot(&u),
        cbf_margin: cbf_level + d.dot(&u),
        u,
        region: Region::hard(active),
        multipliers: Some((l1, l2)),
        tests,
    })
}
