//! Full three-scenario ACC run: `cargo run --release --example acc_experiment [config.toml] [out-dir]`.

use std::path::PathBuf;

use safe_universal::experiment::{parse_config, run_experiment, ExperimentConfig};
use safe_universal::Result;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let mut config = match args.next() {
        Some(path) => parse_config(path)?,
        None => ExperimentConfig::default(),
    };
    config.output.dir = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("acc_experiment"));

    let report = run_experiment(&config)?;
    for s in &report.scenarios {
        let m = &s.outcome.metrics;
        println!("{:<20} min_h {:?}  max speed error {:?}  regions {:?}", s.outcome.kind.label(), m.min_h, m.max_speed_error, m.region_counts);
        if let Some(diag) = &s.outcome.gp_diagnostics {
            println!("{:<20} GP jitter {:e}, condition {:.1}", "", diag[0].jitter, diag[0].condition_estimate);
        }
    }
    println!("outputs in {}", config.output.dir.display());
    Ok(())
}
