//! Clamp the ACC controller's force to ±0.5·M·g and compare with the
//! unconstrained run.

use safe_universal::acc::{run_scenario, AccParams, ScenarioKind, ScenarioSettings};
use safe_universal::dynamics::Vector;
use safe_universal::gp_control::{project_to_box, ControlLimits};
use safe_universal::Result;

fn main() -> Result<()> {
    let limits = ControlLimits::symmetric(2, 1.0)?;
    for u in [[0.3, -0.2], [5.0, -3.0], [0.5, 2.0]] {
        let u = Vector::from_row_slice(&u);
        let p = project_to_box(&u, &limits);
        println!("({:+.1}, {:+.1}) -> ({:+.1}, {:+.1})", u[0], u[1], p[0], p[1]);
    }

    let params = AccParams::default();
    for (label, limit) in [("free", None), ("±0.5 Mg", Some(0.5)), ("±1e-5 Mg", Some(1e-5))] {
        let settings = ScenarioSettings {
            limit_fraction: limit,
            ..ScenarioSettings::default()
        };
        let out = run_scenario(ScenarioKind::TrueDynamics, &params, &settings);
        let m = &out.metrics;
        println!(
            "{label:>10}: min h {:.3}  u/(Mg) in [{:.3e}, {:.3e}]",
            m.min_h.unwrap_or(f64::NAN),
            m.u_min.unwrap_or(f64::NAN),
            m.u_max.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
