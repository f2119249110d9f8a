//! Randomized certification of the closed-form laws against the KKT oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::clf_cbf::{universal_formula, CbfTerms, ClfTerms};
use crate::dynamics::Vector;
use crate::error::{Error, Result};
use crate::gp_control::{relaxed_universal_formula, UncertaintyMargins};
use crate::qp_oracle::{solve_min_norm, PointwiseQp};

/// Shape and constants of the random instances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSpec {
    pub instances: usize,
    pub seed: u64,
    pub input_dim: usize,
    /// Terms `a, b, c, d` are uniform in `[−range, range]`.
    pub range: f64,
    pub kappa: f64,
    pub rho: f64,
    pub phi: f64,
    pub varphi: f64,
    pub m_weight: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            instances: 10_000,
            seed: 1,
            input_dim: 2,
            range: 2.0,
            kappa: 0.2,
            rho: 0.1,
            phi: 1.0,
            varphi: 1.0,
            m_weight: 10.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SweepReport {
    pub instances: usize,
    /// Instances the hard formula rejected as incompatible.
    pub incompatible: usize,
    /// `max ‖u_closed − u_oracle‖` over compatible instances.
    pub max_hard_deviation: f64,
    /// Same for the relaxed formula over all instances.
    pub max_relaxed_deviation: f64,
    pub max_slack_deviation: f64,
    /// Largest `a + b·u + κζ` of a hard decision (should be ≤ 0).
    pub max_hard_clf_violation: f64,
    /// Smallest `c + d·u − ρΓ` of any decision (should be ≥ 0).
    pub min_cbf_margin: f64,
    /// Largest `a + b·u + κζ − χ` of a relaxed decision (should be ≤ 0).
    pub max_relaxed_clf_violation: f64,
    pub min_slack: f64,
}

pub fn random_terms(rng: &mut impl Rng, spec: &SweepSpec) -> (ClfTerms, CbfTerms) {
    let r = spec.range;
    let mut draw = |len: usize| Vector::from_iterator(len, (0..len).map(|_| rng.random_range(-r..=r)));
    let a = draw(1)[0];
    let b = draw(spec.input_dim);
    let c = draw(1)[0];
    let d = draw(spec.input_dim);
    (ClfTerms::from_parts(a, b, spec.phi), CbfTerms::from_parts(c, d, spec.varphi))
}

/// Compares both closed-form laws with [`solve_min_norm`] on random
/// instances, re-evaluating every constraint from the raw terms.
pub fn oracle_sweep(spec: &SweepSpec) -> Result<SweepReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut report = SweepReport {
        instances: spec.instances,
        max_hard_clf_violation: f64::NEG_INFINITY,
        min_cbf_margin: f64::INFINITY,
        max_relaxed_clf_violation: f64::NEG_INFINITY,
        min_slack: f64::INFINITY,
        ..SweepReport::default()
    };
    let zero = UncertaintyMargins::zero(spec.input_dim);
    for _ in 0..spec.instances {
        let (clf, cbf) = random_terms(&mut rng, spec);
        let clf_margin = |u: &Vector| clf.a + clf.b.dot(u) + spec.kappa * clf.zeta;
        let cbf_margin = |u: &Vector| cbf.c + cbf.d.dot(u) - spec.rho * cbf.gamma;
        let qp = PointwiseQp::from_levels(clf.b.clone(), clf.level(spec.kappa), cbf.d.clone(), cbf.level(spec.rho));

        match universal_formula(&clf, &cbf, spec.kappa, spec.rho) {
            Ok(decision) => {
                let oracle = solve_min_norm(&qp)?;
                report.max_hard_deviation = report.max_hard_deviation.max((&decision.u - &oracle.u).norm());
                report.max_hard_clf_violation = report.max_hard_clf_violation.max(clf_margin(&decision.u));
                report.min_cbf_margin = report.min_cbf_margin.min(cbf_margin(&decision.u));
            }
            Err(Error::Incompatible { .. }) => report.incompatible += 1,
            Err(e) => return Err(e),
        }

        let relaxed = relaxed_universal_formula(&clf, &cbf, &zero, spec.kappa, spec.rho, spec.m_weight)?;
        let oracle = solve_min_norm(&qp.with_slack_weight(1.0 / spec.m_weight))?;
        report.max_relaxed_deviation = report.max_relaxed_deviation.max((&relaxed.u - &oracle.u).norm());
        report.max_slack_deviation = report.max_slack_deviation.max((relaxed.slack - oracle.slack).abs());
        report.max_relaxed_clf_violation = report
            .max_relaxed_clf_violation
            .max(clf_margin(&relaxed.u) - relaxed.slack);
        report.min_cbf_margin = report.min_cbf_margin.min(cbf_margin(&relaxed.u));
        report.min_slack = report.min_slack.min(relaxed.slack);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sweep_agrees() {
        let r = oracle_sweep(&SweepSpec {
            instances: 200,
            ..SweepSpec::default()
        })
        .unwrap();
        assert!(r.max_hard_deviation <= 1e-8, "{r:?}");
        assert!(r.max_relaxed_deviation <= 1e-8, "{r:?}");
        assert!(r.min_cbf_margin >= -1e-9, "{r:?}");
    }
}
