//! Reach the origin while staying outside a disc, with the closed-form
//! min-norm law. Prints which region was active along the way.

use std::collections::BTreeMap;

use safe_universal::clf_cbf::{cbf_terms, clf_terms, universal_formula, CbfSpec, ClfSpec};
use safe_universal::dynamics::{simulate, ControlAffineSystem, ControlOutput, Controller, Matrix, Vector};
use safe_universal::Result;

struct Avoid {
    system: ControlAffineSystem,
    clf: ClfSpec,
    cbf: CbfSpec,
}

impl Controller for Avoid {
    fn control(&self, x: &Vector, t: f64) -> Result<ControlOutput> {
        let a = clf_terms(&self.clf, &self.system, x, t)?;
        let c = cbf_terms(&self.cbf, &self.system, x, t)?;
        let d = universal_formula(&a, &c, self.clf.kappa, self.cbf.rho)?;
        Ok(ControlOutput {
            region: Some(d.region),
            clf_value: self.clf.value(x),
            cbf_value: self.cbf.value(x),
            ..ControlOutput::bare(d.u)
        })
    }
}

fn main() -> Result<()> {
    let center = Vector::from_row_slice(&[-2.0, 0.3]);
    let radius: f64 = 1.0;
    let c2 = center.clone();
    let system = ControlAffineSystem::new(2, 2, |_, _| Vector::zeros(2), |_| Matrix::identity(2, 2));
    let clf = ClfSpec::new(|x| x.norm_squared(), |x| x * 2.0, 1.0, 0.2);
    let cbf = CbfSpec::new(
        move |x| (x - &center).norm_squared() - radius * radius,
        move |x| (x - &c2) * 2.0,
        1.0,
        0.1,
    );
    let ctrl = Avoid { system: system.clone(), clf, cbf };

    let x0 = Vector::from_row_slice(&[-4.0, 0.0]);
    let log = simulate(&system, &ctrl, &x0, 10.0, 0.005).map_err(|a| a.error)?;

    let mut regions = BTreeMap::new();
    for r in log.regions.iter().flatten() {
        *regions.entry(r.label()).or_insert(0usize) += 1;
    }
    let min_h = log.cbf_values.iter().copied().fold(f64::INFINITY, f64::min);
    let end = log.states.last().unwrap();
    println!("regions: {regions:?}");
    println!("min h = {min_h:.4}, final x = ({:.4}, {:.4})", end[0], end[1]);
    Ok(())
}
