//! TOML experiment configuration.
//!
//! Every key is optional; omitted ones take the defaults of
//! [`ExperimentConfig::default`]. Unknown keys are rejected with their full
//! path and the closest valid key.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::acc::{AccParams, Drag, GpSettings, ScenarioKind, ScenarioSettings};
use crate::error::{Error, Result};
use crate::gp::beta_values;

/// Overrides `output.dir`.
pub const ENV_OUT: &str = "SAFE_UNIVERSAL_OUT";
/// Overrides `gp.seed`.
pub const ENV_SEED: &str = "SAFE_UNIVERSAL_SEED";

/// Optional keys that the default config leaves unset and therefore does
/// not serialize.
const OPTIONAL_KEYS: [&str; 2] = ["gp.dataset", "control.limit_fraction"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSettings {
    /// s
    pub horizon: f64,
    /// s
    pub dt: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        let s = ScenarioSettings::default();
        Self {
            horizon: s.horizon,
            dt: s.dt,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlSettings {
    /// Clamp the input to `±limit_fraction·M·g`. Off when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    pub dir: PathBuf,
    pub plots: bool,
    /// Write wall-clock runtime into `metrics.json`. Turn off for
    /// byte-reproducible outputs.
    pub record_runtime: bool,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            plots: true,
            record_runtime: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenarios: Vec<ScenarioKind>,
    pub acc: AccParams,
    /// Drag of the controller's model in the mismatched and GP scenarios.
    pub mismatch: Drag,
    pub gp: GpSettings,
    pub integrator: IntegratorSettings,
    pub control: ControlSettings,
    pub output: OutputSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let s = ScenarioSettings::default();
        Self {
            scenarios: ScenarioKind::ALL.to_vec(),
            acc: AccParams::default(),
            mismatch: s.nominal_drag,
            gp: s.gp,
            integrator: IntegratorSettings::default(),
            control: ControlSettings::default(),
            output: OutputSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn scenario_settings(&self) -> ScenarioSettings {
        ScenarioSettings {
            nominal_drag: self.mismatch,
            gp: self.gp.clone(),
            horizon: self.integrator.horizon,
            dt: self.integrator.dt,
            limit_fraction: self.control.limit_fraction,
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.acc.validate()?;
        if self.scenarios.is_empty() {
            return Err(Error::Config("scenarios: select at least one scenario".into()));
        }
        for (i, s) in self.scenarios.iter().enumerate() {
            if self.scenarios[..i].contains(s) {
                return Err(Error::Config(format!("scenarios: {s} listed twice")));
            }
        }
        let IntegratorSettings { horizon, dt } = self.integrator;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("integrator.dt must be positive, got {dt}")));
        }
        if !(horizon >= dt && horizon.is_finite()) {
            return Err(Error::Config(format!(
                "integrator.horizon must be at least dt, got {horizon}"
            )));
        }
        if let Some(f) = self.control.limit_fraction {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::Config(format!("control.limit_fraction must be positive, got {f}")));
            }
        }
        if self.scenarios.contains(&ScenarioKind::GpLearned) {
            self.validate_gp()?;
        }
        Ok(())
    }

    fn validate_gp(&self) -> Result<()> {
        let gp = &self.gp;
        if gp.seed.is_none() && gp.dataset.is_none() {
            return Err(Error::Config("GpLearned needs gp.seed or gp.dataset".into()));
        }
        if gp.samples == 0 {
            return Err(Error::Config("gp.samples must be at least 1".into()));
        }
        if !(gp.noise_std >= 0.0 && gp.noise_std.is_finite()) {
            return Err(Error::Config(format!("gp.noise_std must be ≥ 0, got {}", gp.noise_std)));
        }
        if !(gp.input_fraction >= 0.0) || !(gp.evolve_time >= 0.0) {
            return Err(Error::Config("gp.input_fraction and gp.evolve_time must be ≥ 0".into()));
        }
        gp.kernel.validate(3)?;
        let beta = beta_values(&gp.error_bound, gp.samples)?;
        if beta.len() != 3 {
            return Err(Error::Config(format!("gp.error_bound: expected 3 coordinates, got {}", beta.len())));
        }
        Ok(())
    }
}

/// Parses and validates a config file. Environment overrides are not
/// applied; see [`load_config`].
pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let value: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
    let schema = toml::Table::try_from(ExperimentConfig::default()).map_err(|e| Error::Config(e.to_string()))?;
    check_keys(&value, &schema, "")?;
    let config: ExperimentConfig = value.try_into().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
    config.validate()?;
    Ok(config)
}

/// [`parse_config`] followed by the environment overrides.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let mut config = parse_config(path)?;
    apply_env_overrides(&mut config, |k| std::env::var(k).ok())?;
    Ok(config)
}

/// Applies `SAFE_UNIVERSAL_OUT` and `SAFE_UNIVERSAL_SEED` read through `var`.
pub fn apply_env_overrides(config: &mut ExperimentConfig, var: impl Fn(&str) -> Option<String>) -> Result<()> {
    if let Some(dir) = var(ENV_OUT) {
        config.output.dir = PathBuf::from(dir);
    }
    if let Some(seed) = var(ENV_SEED) {
        let seed = seed
            .trim()
            .parse()
            .map_err(|e| Error::Config(format!("{ENV_SEED}={seed:?} is not a seed: {e}")))?;
        config.gp.seed = Some(seed);
    }
    Ok(())
}

fn check_keys(value: &toml::Table, schema: &toml::Table, prefix: &str) -> Result<()> {
    for (key, item) in value {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match schema.get(key) {
            Some(toml::Value::Table(sub)) => {
                if let toml::Value::Table(given) = item {
                    check_keys(given, sub, &path)?;
                }
            }
            Some(_) => {}
            None if OPTIONAL_KEYS.contains(&path.as_str()) => {}
            None => {
                let candidates = schema
                    .keys()
                    .map(String::as_str)
                    .chain(OPTIONAL_KEYS.iter().filter_map(|k| {
                        let (parent, leaf) = k.rsplit_once('.').unwrap_or(("", k));
                        (parent == prefix).then_some(leaf)
                    }));
                let suggestion = candidates
                    .map(|c| (strsim::jaro_winkler(key, c), c))
                    .max_by(|a, b| a.0.total_cmp(&b.0))
                    .map(|(_, c)| {
                        if prefix.is_empty() {
                            c.to_string()
                        } else {
                            format!("{prefix}.{c}")
                        }
                    });
                let hint = suggestion.map(|s| format!("; did you mean `{s}`?")).unwrap_or_default();
                return Err(Error::Config(format!("unknown key `{path}`{hint}")));
            }
        }
    }
    Ok(())
}
