//! Reference solver for the pointwise min-norm problems behind the
//! universal formulas.
//!
//! Every active-set pattern of the (at most two) inequality constraints is
//! solved as an equality-constrained least-norm problem by QR; the
//! feasible, dual-feasible candidate with the smallest objective wins. Nothing here shares code with the closed-form
//! controllers, so it can certify them.

use nalgebra::DMatrix;

use crate::dynamics::Vector;
use crate::error::{Error, Result};

/// Absolute primal and dual feasibility tolerance.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-10;
/// Objective values closer than this count as ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// `min ½(‖u‖² + s·χ²)` subject to `b·u − χ ≤ clf_rhs` and `d·u ≥ cbf_rhs`.
///
/// With `slack_weight = None` there is no `χ` and the CLF row is hard.
/// For the universal formulas `clf_rhs = −(a + κζ)` and `cbf_rhs = ρΓ − c`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseQp {
    pub clf_row: Option<(Vector, f64)>,
    pub cbf_row: Option<(Vector, f64)>,
    pub slack_weight: Option<f64>,
}

impl PointwiseQp {
    /// Hard CLF and CBF rows built from the levels `A = a + κζ` and
    /// `C = c − ρΓ`.
    pub fn from_levels(b: Vector, clf_level: f64, d: Vector, cbf_level: f64) -> Self {
        Self {
            clf_row: Some((b, -clf_level)),
            cbf_row: Some((d, -cbf_level)),
            slack_weight: None,
        }
    }

    pub fn with_slack_weight(mut self, weight: f64) -> Self {
        self.slack_weight = Some(weight);
        self
    }

    fn input_dim(&self) -> Result<usize> {
        match (&self.clf_row, &self.cbf_row) {
            (None, None) => Err(Error::Precondition("pointwise QP needs at least one row".into())),
            (Some((b, _)), Some((d, _))) if b.len() != d.len() => Err(Error::DimensionMismatch {
                context: "QP rows",
                expected: b.len(),
                actual: d.len(),
            }),
            (Some((b, _)), _) => Ok(b.len()),
            (None, Some((d, _))) => Ok(d.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintLabel {
    Clf,
    Cbf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub u: Vector,
    /// `χ`; zero when the problem has no slack.
    pub slack: f64,
    pub active_set: Vec<ConstraintLabel>,
    pub objective: f64,
    /// Multipliers in the order of `active_set`.
    pub multipliers: Vec<f64>,
}

struct Row {
    label: ConstraintLabel,
    // g·z ≤ h
    g: Vec<f64>,
    h: f64,
}

/// Solves the pointwise QP by exhaustive KKT enumeration.
///
/// Returns [`Error::QpInfeasible`] when no active set yields a primal and
/// dual feasible point.
pub fn solve_min_norm(problem: &PointwiseQp) -> Result<QpSolution> {
    let m = problem.input_dim()?;
    if let Some(w) = problem.slack_weight {
        if !(w > 0.0) {
            return Err(Error::Precondition(format!("slack weight must be positive, got {w}")));
        }
    }
    let with_slack = problem.slack_weight.is_some();
    let nz = m + usize::from(with_slack);

    let mut weights = vec![1.0; nz];
    if let Some(w) = problem.slack_weight {
        weights[m] = w;
    }

    let mut rows = Vec::new();
    if let Some((b, rhs)) = &problem.clf_row {
        let mut g: Vec<f64> = b.iter().copied().collect();
        if with_slack {
            g.push(-1.0);
        }
        rows.push(Row { label: ConstraintLabel::Clf, g, h: *rhs });
    }
    if let Some((d, rhs)) = &problem.cbf_row {
        let mut g: Vec<f64> = d.iter().map(|v| -v).collect();
        if with_slack {
            g.push(0.0);
        }
        rows.push(Row { label: ConstraintLabel::Cbf, g, h: -rhs });
    }

    // subsets ordered by size so that ties resolve toward fewer active rows
    let mut subsets: Vec<Vec<usize>> = vec![vec![]];
    subsets.extend((0..rows.len()).map(|i| vec![i]));
    if rows.len() == 2 {
        subsets.push(vec![0, 1]);
    }

    let mut best: Option<QpSolution> = None;
    for subset in &subsets {
        let Some((z, mu)) = solve_equality(&weights, &rows, subset) else {
            continue;
        };
        let primal_ok = rows
            .iter()
            .all(|r| dot(&r.g, &z) <= r.h + FEASIBILITY_TOLERANCE);
        let dual_ok = mu.iter().all(|&l| l >= -FEASIBILITY_TOLERANCE);
        if !(primal_ok && dual_ok) {
            continue;
        }
        let objective = 0.5 * z.iter().zip(&weights).map(|(v, w)| w * v * v).sum::<f64>();
        let better = match &best {
            None => true,
            Some(b) => objective < b.objective - TIE_TOLERANCE,
        };
        if better {
            best = Some(QpSolution {
                u: Vector::from_iterator(m, z[..m].iter().copied()),
                slack: if with_slack { z[m] } else { 0.0 },
                active_set: subset.iter().map(|&i| rows[i].label).collect(),
                objective,
                multipliers: mu,
            });
        }
    }
    best.ok_or(Error::QpInfeasible)
}

/// Least-weighted-norm solution of `G_S z = h_S` for the rows in `subset`,
/// with multipliers of `Wz + G_Sᵀμ = 0`.
///
/// After the change of variables `y = W^{1/2} z` this is a minimum-norm
/// problem, solved through a thin QR factorization of `(G_S W^{−1/2})ᵀ`.
fn solve_equality(weights: &[f64], rows: &[Row], subset: &[usize]) -> Option<(Vec<f64>, Vec<f64>)> {
    let nz = weights.len();
    let k = subset.len();
    if k == 0 {
        return Some((vec![0.0; nz], vec![]));
    }
    if k > nz {
        return None;
    }
    let scale: Vec<f64> = weights.iter().map(|w| 1.0 / w.sqrt()).collect();
    let mut at = DMatrix::<f64>::zeros(nz, k);
    let mut h = Vector::zeros(k);
    for (j, &ri) in subset.iter().enumerate() {
        for i in 0..nz {
            at[(i, j)] = rows[ri].g[i] * scale[i];
        }
        h[j] = rows[ri].h;
    }
    let col_norms: Vec<f64> = (0..k).map(|j| at.column(j).norm()).collect();
    let qr = at.qr();
    let (q, r) = (qr.q(), qr.r());
    // (numerically) dependent or vanishing active rows
    for j in 0..k {
        if !(r[(j, j)].abs() > 1e-6 * col_norms[j]) {
            return None;
        }
    }
    let t = r.transpose().solve_lower_triangular(&h)?;
    let y = &q * &t;
    let mu = -r.solve_upper_triangular(&t)?;
    if y.iter().chain(mu.iter()).any(|v| !v.is_finite()) {
        return None;
    }
    let z = y.iter().zip(&scale).map(|(y, s)| y * s).collect();
    Some((z, mu.iter().copied().collect()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    #[test]
    fn zero_is_optimal_when_feasible() {
        let qp = PointwiseQp::from_levels(v(&[1.0, 0.0]), -1.0, v(&[0.0, 1.0]), 1.0);
        let sol = solve_min_norm(&qp).unwrap();
        assert_eq!(sol.u, v(&[0.0, 0.0]));
        assert!(sol.active_set.is_empty());
    }

    #[test]
    fn single_halfspace_projection() {
        let qp = PointwiseQp {
            clf_row: Some((v(&[1.0, 0.0]), -2.0)),
            cbf_row: None,
            slack_weight: None,
        };
        let sol = solve_min_norm(&qp).unwrap();
        assert!((sol.u - v(&[-2.0, 0.0])).norm() < 1e-14);
        assert_eq!(sol.active_set, vec![ConstraintLabel::Clf]);
        assert!((sol.multipliers[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn contradictory_parallel_rows_are_infeasible() {
        // u1 ≤ −1 and u1 ≥ 1
        let qp = PointwiseQp {
            clf_row: Some((v(&[1.0, 0.0]), -1.0)),
            cbf_row: Some((v(&[1.0, 0.0]), 1.0)),
            slack_weight: None,
        };
        assert!(matches!(solve_min_norm(&qp), Err(Error::QpInfeasible)));
    }

    #[test]
    fn slack_restores_feasibility() {
        let qp = PointwiseQp {
            clf_row: Some((v(&[1.0, 0.0]), -1.0)),
            cbf_row: Some((v(&[1.0, 0.0]), 1.0)),
            slack_weight: Some(0.1),
        };
        let sol = solve_min_norm(&qp).unwrap();
        // CBF row forces u1 = 1, slack covers the CLF row: χ = 2
        assert!((sol.u - v(&[1.0, 0.0])).norm() < 1e-12);
        assert!((sol.slack - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_empty_problem() {
        let qp = PointwiseQp {
            clf_row: None,
            cbf_row: None,
            slack_weight: None,
        };
        assert!(matches!(solve_min_norm(&qp), Err(Error::Precondition(_))));
    }
}
