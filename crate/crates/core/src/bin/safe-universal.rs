use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use safe_universal::acc::{learn_residual, ScenarioKind};
use safe_universal::experiment::config::{apply_env_overrides, ExperimentConfig};
use safe_universal::experiment::{load_config, run_experiment, ExitStatus};
use safe_universal::gp::beta_values;
use safe_universal::verify::{oracle_sweep, SweepSpec};
use safe_universal::Error;

#[derive(Parser)]
#[command(version, about = "Safe stabilization with CLF/CBF universal formulas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the ACC scenarios and write trajectories, metrics and plots.
    Run(Common),
    /// Check the closed-form laws against the KKT oracle on random instances.
    Verify {
        #[arg(long, default_value_t = 10_000)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Maximum accepted deviation from the oracle.
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
    },
    /// Fit the residual GP and print its diagnostics.
    GpFit(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides config and environment).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for training data generation.
    #[arg(long)]
    seed: Option<u64>,
    /// Scenario to run; repeat to select several.
    #[arg(long = "scenario")]
    scenarios: Vec<ScenarioKind>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let mut config = match &self.config {
            Some(path) => load_config(path)?,
            None => {
                let mut c = ExperimentConfig::default();
                apply_env_overrides(&mut c, |k| std::env::var(k).ok())?;
                c
            }
        };
        if let Some(out) = &self.out {
            config.output.dir = out.clone();
        }
        if let Some(seed) = self.seed {
            config.gp.seed = Some(seed);
        }
        if !self.scenarios.is_empty() {
            config.scenarios = self.scenarios.clone();
        }
        config.validate()?;
        Ok(config)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(ExitStatus::ConfigError.code() as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let status = match cli.command {
        Command::Run(common) => run(&common),
        Command::Verify {
            instances,
            seed,
            tolerance,
        } => verify(instances, seed, tolerance),
        Command::GpFit(common) => gp_fit(&common),
    };
    ExitCode::from(status.code() as u8)
}

fn fail(e: &Error) -> ExitStatus {
    eprintln!("error: {e}");
    ExitStatus::for_error(e)
}

fn run(common: &Common) -> ExitStatus {
    let config = match common.resolve() {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let report = match run_experiment(&config) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    for s in &report.scenarios {
        let m = &s.outcome.metrics;
        let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.4}"));
        let sci = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.3e}"));
        println!(
            "{:<20} min_h {:>10}  max|v_f - v_d| {:>8}  u/(Mg) [{}, {}]  -> {}",
            s.outcome.kind.label(),
            fmt(m.min_h),
            fmt(m.max_speed_error),
            sci(m.u_min),
            sci(m.u_max),
            s.dir.display()
        );
        if let Some(e) = m.error.as_ref().or(s.write_error.as_ref()) {
            eprintln!("{}: {e}", s.outcome.kind.label());
        }
    }
    report.status()
}

fn verify(instances: usize, seed: u64, tolerance: f64) -> ExitStatus {
    let spec = SweepSpec {
        instances,
        seed,
        ..SweepSpec::default()
    };
    let report = match oracle_sweep(&spec) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    let ok = report.max_hard_deviation <= tolerance
        && report.max_relaxed_deviation <= tolerance
        && report.min_cbf_margin >= -1e-9;
    println!(
        "max deviation: hard {:.3e}, relaxed {:.3e} ({})",
        report.max_hard_deviation,
        report.max_relaxed_deviation,
        if ok { "ok" } else { "FAILED" }
    );
    if ok {
        ExitStatus::Success
    } else {
        ExitStatus::ScenarioError
    }
}

fn gp_fit(common: &Common) -> ExitStatus {
    let config = match common.resolve() {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let settings = config.scenario_settings();
    let (data, posterior) = match learn_residual(&config.acc, &settings) {
        Ok(fit) => fit,
        Err(e) => return fail(&e),
    };
    let beta = match beta_values(&settings.gp.error_bound, data.len()) {
        Ok(b) => b,
        Err(e) => return fail(&e),
    };
    let summary = serde_json::json!({
        "samples": data.len(),
        "noise_std": data.noise_std,
        "kernel": posterior.kernel(0),
        "diagnostics": posterior.diagnostics(),
        "log_marginal_likelihood": posterior.log_marginal_likelihood(),
        "beta": beta.as_slice(),
    });
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    if common.out.is_some() || common.config.is_some() {
        let dir: &Path = &config.output.dir;
        if let Err(e) = std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.into(), source: e }) {
            return fail(&e);
        }
        let path = dir.join("gp_dataset.csv");
        if let Err(e) = data.write_csv(&path) {
            return fail(&e);
        }
        println!("dataset written to {}", path.display());
    }
    ExitStatus::Success
}
