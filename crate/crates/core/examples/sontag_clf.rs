//! CLF-only universal formula on a planar single integrator `ẋ = u`.

use safe_universal::clf_cbf::{clf_terms, sontag_clf_control, ClfSpec};
use safe_universal::dynamics::{simulate, ControlAffineSystem, Matrix, Vector};
use safe_universal::Result;

fn main() -> Result<()> {
    let system = ControlAffineSystem::new(2, 2, |_, _| Vector::zeros(2), |_| Matrix::identity(2, 2));
    let clf = ClfSpec::new(|x| x.norm_squared(), |x| x * 2.0, 0.5, 0.2);
    let kappa = clf.kappa;

    let controller = |x: &Vector, t: f64| -> Result<Vector> {
        let terms = clf_terms(&clf, &system, x, t)?;
        Ok(sontag_clf_control(&terms, kappa))
    };

    let x0 = Vector::from_row_slice(&[2.0, -1.0]);
    let log = simulate(&system, &controller, &x0, 5.0, 0.01).map_err(|a| a.error)?;
    for k in (0..log.len()).step_by(100) {
        let x = &log.states[k];
        println!("t = {:4.1}  x = ({:+.4}, {:+.4})  V = {:.3e}", log.times[k], x[0], x[1], clf.value(x));
    }
    Ok(())
}
