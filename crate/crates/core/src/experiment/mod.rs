//! Batch experiment driver: runs the selected ACC scenarios concurrently
//! and writes trajectories, metrics and plots.
//!
//! Layout under `output.dir`:
//!
//! ```text
//! <Scenario>/trajectory.csv
//! <Scenario>/metrics.json
//! <Scenario>/plots/{speed,cbf,input}.svg
//! comparison/{speed,cbf,input}.svg
//! ```

pub mod config;
pub mod plot;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::acc::{run_scenario, AccParams, Metrics, ScenarioOutcome};
use crate::dynamics::TrajectoryLog;
use crate::error::{Error, Result};

pub use config::{load_config, parse_config, parse_config_str, ExperimentConfig};
pub use plot::render_plots;

/// Trajectory CSV header, in column order.
pub const CSV_COLUMNS: [&str; 12] = [
    "t", "v_f", "v_l", "D", "u", "u_scaled", "V", "h", "region", "a_L", "delta_v", "delta_h",
];

/// Process exit codes of the runner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    ConfigError = 1,
    ScenarioError = 2,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    /// Exit status for an error raised before any scenario ran.
    pub fn for_error(e: &Error) -> Self {
        match e {
            Error::Config(_) => ExitStatus::ConfigError,
            _ => ExitStatus::ScenarioError,
        }
    }
}

pub fn write_trajectory_csv(log: &TrajectoryLog, params: &AccParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if log.is_empty() {
        return Err(Error::Precondition("cannot write an empty trajectory".into()));
    }
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    let weight = params.weight();
    for k in 0..log.len() {
        let x = &log.states[k];
        let u = log.controls[k][0];
        let h = x[2] - params.time_headway * x[0];
        let v = (x[0] - params.desired_speed).powi(2);
        let region = log.regions[k].map(|r| r.label()).unwrap_or("");
        let row = [
            log.times[k].to_string(),
            x[0].to_string(),
            x[1].to_string(),
            x[2].to_string(),
            u.to_string(),
            (u / weight).to_string(),
            v.to_string(),
            h.to_string(),
            region.to_string(),
            log.exogenous_values[k].to_string(),
            log.delta_v[k].to_string(),
            log.delta_h[k].to_string(),
        ];
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_metrics_json(metrics: &Metrics, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, metrics).map_err(|e| Error::io(path, e.into()))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Files written for one scenario.
#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub outcome: ScenarioOutcome,
    pub dir: PathBuf,
    /// Error raised while persisting this scenario's outputs.
    pub write_error: Option<String>,
}

impl ScenarioReport {
    pub fn is_ok(&self) -> bool {
        self.outcome.is_ok() && self.write_error.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub scenarios: Vec<ScenarioReport>,
    pub comparison: Vec<PathBuf>,
}

impl ExperimentReport {
    pub fn status(&self) -> ExitStatus {
        if self.scenarios.iter().all(ScenarioReport::is_ok) {
            ExitStatus::Success
        } else {
            ExitStatus::ScenarioError
        }
    }
}

/// Runs every selected scenario on its own thread, then renders the
/// comparison plots. Scenario failures are recorded in the report (and in
/// each `metrics.json`); only setup and I/O problems on the output root are
/// returned as errors.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let root = &config.output.dir;
    std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let settings = config.scenario_settings();

    let outcomes: Vec<ScenarioOutcome> = std::thread::scope(|s| {
        let handles: Vec<_> = config
            .scenarios
            .iter()
            .map(|&kind| {
                let settings = &settings;
                s.spawn(move || run_scenario(kind, &config.acc, settings))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario thread panicked"))
            .collect()
    });

    let mut scenarios = Vec::with_capacity(outcomes.len());
    for mut outcome in outcomes {
        if !config.output.record_runtime {
            outcome.metrics.runtime_s = None;
        }
        let dir = root.join(outcome.kind.label());
        let write_error = persist(&outcome, config, &dir).err().map(|e| e.to_string());
        scenarios.push(ScenarioReport {
            outcome,
            dir,
            write_error,
        });
    }

    let mut comparison = Vec::new();
    if config.output.plots {
        let logs: Vec<(&str, &TrajectoryLog)> = scenarios
            .iter()
            .filter(|r| !r.outcome.log.is_empty())
            .map(|r| (r.outcome.kind.label(), &r.outcome.log))
            .collect();
        if !logs.is_empty() {
            comparison = render_plots(&logs, &config.acc, root.join("comparison"))?;
        }
    }
    Ok(ExperimentReport { scenarios, comparison })
}

fn persist(outcome: &ScenarioOutcome, config: &ExperimentConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_metrics_json(&outcome.metrics, dir.join("metrics.json"))?;
    if outcome.log.is_empty() {
        return Ok(());
    }
    write_trajectory_csv(&outcome.log, &config.acc, dir.join("trajectory.csv"))?;
    if config.output.plots {
        render_plots(&[(outcome.kind.label(), &outcome.log)], &config.acc, dir.join("plots"))?;
    }
    Ok(())
}
