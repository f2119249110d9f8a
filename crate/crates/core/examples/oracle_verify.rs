//! Certify the closed-form laws against the KKT-enumeration oracle.

use std::time::Instant;

use safe_universal::verify::{oracle_sweep, SweepSpec};
use safe_universal::Result;

fn main() -> Result<()> {
    for seed in 1..=3 {
        let start = Instant::now();
        let r = oracle_sweep(&SweepSpec { seed, ..SweepSpec::default() })?;
        println!(
            "seed {seed}: {} instances ({} incompatible)  hard {:.2e}  relaxed {:.2e}  min CBF margin {:+.2e}  [{:.0?}]",
            r.instances,
            r.incompatible,
            r.max_hard_deviation,
            r.max_relaxed_deviation,
            r.min_cbf_margin,
            start.elapsed()
        );
    }
    Ok(())
}
