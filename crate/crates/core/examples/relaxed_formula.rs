//! When the CLF and CBF conditions conflict the hard formula gives up,
//! the relaxed one keeps the barrier and pays with slack.

use safe_universal::clf_cbf::{compatibility_status, universal_formula, CbfTerms, ClfTerms};
use safe_universal::dynamics::Vector;
use safe_universal::gp_control::{relaxed_universal_formula, UncertaintyMargins};
use safe_universal::qp_oracle::{solve_min_norm, PointwiseQp};
use safe_universal::Result;

fn main() -> Result<()> {
    // b·u ≤ −1 and d·u ≥ 1 along the same axis
    let clf = ClfTerms::from_parts(1.0, Vector::from_row_slice(&[1.0, 0.0]), 0.0);
    let cbf = CbfTerms::from_parts(-1.0, Vector::from_row_slice(&[1.0, 0.0]), 0.0);
    let (kappa, rho) = (0.0, 0.0);

    println!("compatibility: {:?}", compatibility_status(&clf, &cbf, kappa, rho)?);
    match universal_formula(&clf, &cbf, kappa, rho) {
        Ok(d) => println!("hard formula: {:?}", d.u),
        Err(e) => println!("hard formula: {e}"),
    }

    for m in [0.1, 1.0, 10.0, 100.0] {
        let d = relaxed_universal_formula(&clf, &cbf, &UncertaintyMargins::zero(2), kappa, rho, m)?;
        let qp = PointwiseQp::from_levels(clf.b.clone(), clf.level(kappa), cbf.d.clone(), cbf.level(rho))
            .with_slack_weight(1.0 / m);
        let oracle = solve_min_norm(&qp)?;
        println!(
            "m = {m:>5}: {} u = ({:+.4}, {:+.4}) slack {:.4}  cbf margin {:+.1e}  |u - oracle| = {:.1e}",
            d.region,
            d.u[0],
            d.u[1],
            d.slack,
            d.cbf_margin,
            (&d.u - &oracle.u).norm()
        );
    }
    Ok(())
}
