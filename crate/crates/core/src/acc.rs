//! Adaptive cruise control benchmark: a follower tracks a desired speed
//! while keeping a time headway to a lead vehicle with scheduled
//! acceleration.
//!
//! State `x = (v_f, v_l, D)`, input the follower's wheel force `u` in N.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clf_cbf::{CbfSpec, ClfSpec};
use crate::dynamics::{rk4_step, simulate, ControlAffineSystem, Matrix, Plant, TrajectoryLog, UncertainSystem, Vector};
use crate::error::{Error, Result};
use crate::gp::{
    beta_values, build_measurements, fit_posterior, ErrorBoundConfig, FitDiagnostics, GpPosterior,
    KernelConfig, ResidualDataset, Sample,
};
use crate::gp_control::{ControlLaw, ControlLimits, GpCorrection, MarginMode, SafeController};

/// Slack weight listed in the parameter table; the experiment itself uses
/// [`AccParams::default`]'s `m_weight = 10`.
pub const TABLE_SLACK_WEIGHT: f64 = 100.0;

/// Quadratic rolling/aerodynamic drag `F_r(v) = f0 + f1·v + f2·v²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Drag {
    pub f0: f64,
    pub f1: f64,
    pub f2: f64,
}

impl Drag {
    pub fn force(&self, v: f64) -> f64 {
        self.f0 + self.f1 * v + self.f2 * v * v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AccParams {
    /// kg
    pub mass: f64,
    pub f0: f64,
    pub f1: f64,
    pub f2: f64,
    pub gravity: f64,
    pub desired_speed: f64,
    pub time_headway: f64,
    pub lead_decel_fraction: f64,
    pub clf_lambda: f64,
    pub cbf_beta: f64,
    pub kappa: f64,
    pub rho: f64,
    pub m_weight: f64,
    /// `(v_f, v_l, D)` at `t = 0`.
    pub initial_state: [f64; 3],
}

impl Default for AccParams {
    fn default() -> Self {
        Self {
            mass: 1650.0,
            f0: 0.1,
            f1: 5.0,
            f2: 0.25,
            gravity: 9.81,
            desired_speed: 22.0,
            time_headway: 1.8,
            lead_decel_fraction: 0.3,
            clf_lambda: 4.0,
            cbf_beta: 0.5,
            kappa: 0.2,
            rho: 0.1,
            m_weight: 10.0,
            initial_state: [18.0, 15.0, 150.0],
        }
    }
}

impl AccParams {
    pub fn drag(&self) -> Drag {
        Drag {
            f0: self.f0,
            f1: self.f1,
            f2: self.f2,
        }
    }

    /// `M·g`, the scale used when reporting inputs.
    pub fn weight(&self) -> f64 {
        self.mass * self.gravity
    }

    pub fn initial_state(&self) -> Vector {
        Vector::from_row_slice(&self.initial_state)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("gravity", self.gravity),
            ("time_headway", self.time_headway),
            ("m_weight", self.m_weight),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Config(format!("acc.{name} must be positive, got {value}")));
            }
        }
        let non_negative = [
            ("clf_lambda", self.clf_lambda),
            ("cbf_beta", self.cbf_beta),
            ("kappa", self.kappa),
            ("rho", self.rho),
        ];
        for (name, value) in non_negative {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::Config(format!("acc.{name} must be non-negative, got {value}")));
            }
        }
        if self.initial_state.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("acc.initial_state must be finite".into()));
        }
        Ok(())
    }
}

/// Lead-vehicle acceleration in m/s².
pub fn lead_acceleration(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("lead schedule is defined for t ≥ 0, got {t}")));
    }
    Ok(lead_schedule(t))
}

fn lead_schedule(t: f64) -> f64 {
    match t {
        t if t <= 8.0 => 0.0,
        t if t <= 18.0 => 1.2,
        t if t <= 30.0 => 0.0,
        t if t <= 40.0 => 0.5,
        t if t <= 50.0 => 0.0,
        t if t <= 60.0 => -1.0,
        _ => 0.0,
    }
}

/// Longitudinal model with drag `drag`, mass from `params` and lead
/// acceleration `schedule`.
pub fn build_acc_system(
    params: &AccParams,
    drag: Drag,
    schedule: impl Fn(f64) -> f64 + Send + Sync + 'static,
) -> ControlAffineSystem {
    let mass = params.mass;
    let schedule = Arc::new(schedule);
    let signal = Arc::clone(&schedule);
    ControlAffineSystem::new(
        3,
        1,
        move |x, t| Vector::from_row_slice(&[-drag.force(x[0]) / mass, schedule(t), x[1] - x[0]]),
        move |_| Matrix::from_row_slice(3, 1, &[1.0 / mass, 0.0, 0.0]),
    )
    .with_exogenous(move |t| signal(t))
}

/// The plant with the true drag and the standard lead schedule.
pub fn true_system(params: &AccParams) -> ControlAffineSystem {
    build_acc_system(params, params.drag(), lead_schedule)
}

/// `nominal` plus the residual `ω(x)` that turns it into the true plant.
pub fn true_plant(params: &AccParams, nominal_drag: Drag) -> UncertainSystem {
    let nominal = build_acc_system(params, nominal_drag, lead_schedule);
    let (truth, mass) = (params.drag(), params.mass);
    UncertainSystem::new(nominal, move |x| {
        Vector::from_row_slice(&[(nominal_drag.force(x[0]) - truth.force(x[0])) / mass, 0.0, 0.0])
    })
}

/// `V = (v_f − v_d)²` and `h = D − τ_d·v_f`.
pub fn build_acc_clf_cbf(params: &AccParams) -> (ClfSpec, CbfSpec) {
    let (vd, tau) = (params.desired_speed, params.time_headway);
    let clf = ClfSpec::new(
        move |x| (x[0] - vd).powi(2),
        move |x| Vector::from_row_slice(&[2.0 * (x[0] - vd), 0.0, 0.0]),
        params.clf_lambda,
        params.kappa,
    );
    let cbf = CbfSpec::new(
        move |x| x[2] - tau * x[0],
        move |_| Vector::from_row_slice(&[-tau, 0.0, 1.0]),
        params.cbf_beta,
        params.rho,
    );
    (clf, cbf)
}

/// Operating box the training states are drawn from.
pub const TRAINING_BOX: [(f64, f64); 3] = [(0.0, 35.0), (0.0, 35.0), (0.0, 250.0)];

/// Settings for [`generate_training_data`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingSpec {
    pub samples: usize,
    pub seed: u64,
    pub noise_std: f64,
    /// Inputs are uniform in `±input_bound` (N).
    pub input_bound: f64,
    /// Each sample is evolved this long (s) under its input before measuring.
    pub evolve_time: f64,
    /// Sample times are uniform in `[0, horizon]`.
    pub horizon: f64,
}

pub fn generate_training_data(
    truth: &UncertainSystem,
    nominal: &ControlAffineSystem,
    spec: &TrainingSpec,
) -> Result<ResidualDataset> {
    if spec.samples == 0 {
        return Err(Error::Precondition("training set needs at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut samples = Vec::with_capacity(spec.samples);
    for _ in 0..spec.samples {
        let x0 = Vector::from_iterator(3, TRAINING_BOX.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)));
        let u = Vector::from_element(1, rng.random_range(-spec.input_bound..=spec.input_bound));
        let t0 = rng.random_range(0.0..=spec.horizon);
        let (state, time) = if spec.evolve_time > 0.0 {
            let x = rk4_step(|y, s| truth.field(y, &u, s), &x0, t0, spec.evolve_time)?;
            (x, t0 + spec.evolve_time)
        } else {
            (x0, t0)
        };
        let state_dot = truth.field(&state, &u, time)?;
        samples.push(Sample {
            state,
            state_dot,
            input: u,
            time,
        });
    }
    build_measurements(&samples, nominal, spec.noise_std, spec.seed.wrapping_add(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ScenarioKind {
    TrueDynamics,
    MismatchedDynamics,
    GpLearned,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [
        ScenarioKind::TrueDynamics,
        ScenarioKind::MismatchedDynamics,
        ScenarioKind::GpLearned,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ScenarioKind::TrueDynamics => "TrueDynamics",
            ScenarioKind::MismatchedDynamics => "MismatchedDynamics",
            ScenarioKind::GpLearned => "GpLearned",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let labels: Vec<&str> = Self::ALL.iter().map(|k| k.label()).collect();
                Error::Config(format!("unknown scenario {s:?}; expected one of {}", labels.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpSettings {
    pub samples: usize,
    pub seed: Option<u64>,
    pub noise_std: f64,
    /// Read residuals from this CSV instead of generating them.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    /// Training inputs are uniform in `±input_fraction·M·g`.
    pub input_fraction: f64,
    pub evolve_time: f64,
    pub kernel: KernelConfig,
    pub error_bound: ErrorBoundConfig,
    pub margin_mode: MarginMode,
}

impl Default for GpSettings {
    fn default() -> Self {
        Self {
            samples: 2000,
            seed: Some(7),
            noise_std: 1e-3,
            dataset: None,
            input_fraction: 0.5,
            evolve_time: 0.1,
            kernel: KernelConfig::squared_exponential(1e-4, vec![10.0, 10.0, 100.0]),
            error_bound: ErrorBoundConfig {
                delta: 0.01,
                rkhs_norms: Vec::new(),
                information_gains: Vec::new(),
                beta_override: Some(vec![3.0; 3]),
            },
            margin_mode: MarginMode::Elementwise,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSettings {
    /// Drag of the controller's (wrong) model.
    pub nominal_drag: Drag,
    pub gp: GpSettings,
    pub horizon: f64,
    pub dt: f64,
    /// Clamp `u` to `±limit_fraction·M·g` after the formula when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit_fraction: Option<f64>,
}

impl Default for ScenarioSettings {
    fn default() -> Self {
        Self {
            nominal_drag: Drag {
                f0: 10.0,
                f1: 5.0,
                f2: 0.25,
            },
            gp: GpSettings::default(),
            horizon: 70.0,
            dt: 0.01,
            limit_fraction: None,
        }
    }
}

impl ScenarioSettings {
    pub fn training_spec(&self, params: &AccParams) -> Result<TrainingSpec> {
        let seed = self.gp.seed.ok_or_else(|| {
            Error::Config("GpLearned needs gp.seed or gp.dataset".into())
        })?;
        Ok(TrainingSpec {
            samples: self.gp.samples,
            seed,
            noise_std: self.gp.noise_std,
            input_bound: self.gp.input_fraction * params.weight(),
            evolve_time: self.gp.evolve_time,
            horizon: self.horizon,
        })
    }
}

/// Summary statistics of one run. `u_min`/`u_max` are scaled by `1/(M·g)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub min_h: Option<f64>,
    pub max_speed_error: Option<f64>,
    pub region_counts: BTreeMap<String, usize>,
    pub u_min: Option<f64>,
    pub u_max: Option<f64>,
    pub runtime_s: Option<f64>,
    pub error: Option<String>,
}

impl Metrics {
    pub fn from_log(log: &TrajectoryLog, params: &AccParams) -> Self {
        let fold = |it: &mut dyn Iterator<Item = f64>, pick: fn(f64, f64) -> f64| it.reduce(pick);
        let tau = params.time_headway;
        let min_h = fold(&mut log.states.iter().map(|x| x[2] - tau * x[0]), f64::min);
        let max_speed_error = fold(
            &mut log.states.iter().map(|x| (x[0] - params.desired_speed).abs()),
            f64::max,
        );
        let scale = 1.0 / params.weight();
        let u_min = fold(&mut log.controls.iter().map(|u| u[0] * scale), f64::min);
        let u_max = fold(&mut log.controls.iter().map(|u| u[0] * scale), f64::max);
        let mut region_counts = BTreeMap::new();
        for r in log.regions.iter().flatten() {
            *region_counts.entry(r.label().to_string()).or_insert(0) += 1;
        }
        Self {
            min_h,
            max_speed_error,
            region_counts,
            u_min,
            u_max,
            runtime_s: None,
            error: None,
        }
    }
}

/// Result of one scenario. Always carries metrics; on failure `log` holds
/// the samples recorded before the error and `metrics.error` its message.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub kind: ScenarioKind,
    pub log: TrajectoryLog,
    pub metrics: Metrics,
    pub gp_diagnostics: Option<Vec<FitDiagnostics>>,
}

impl ScenarioOutcome {
    pub fn is_ok(&self) -> bool {
        self.metrics.error.is_none()
    }
}

/// Loads or generates the residual dataset of the GP scenario and fits it.
pub fn learn_residual(params: &AccParams, settings: &ScenarioSettings) -> Result<(ResidualDataset, GpPosterior)> {
    let data = match &settings.gp.dataset {
        Some(path) => ResidualDataset::read_csv(path, settings.gp.noise_std)?,
        None => {
            let truth = true_plant(params, settings.nominal_drag);
            let nominal = build_acc_system(params, settings.nominal_drag, lead_schedule);
            generate_training_data(&truth, &nominal, &settings.training_spec(params)?)?
        }
    };
    let posterior = fit_posterior(&data, &settings.gp.kernel)?;
    Ok((data, posterior))
}

/// Builds the controller for a scenario. Every scenario uses the
/// stability-relaxed formula.
pub fn build_controller(
    kind: ScenarioKind,
    params: &AccParams,
    settings: &ScenarioSettings,
) -> Result<(SafeController, Option<Vec<FitDiagnostics>>)> {
    let (clf, cbf) = build_acc_clf_cbf(params);
    let law = ControlLaw::Relaxed {
        m_weight: params.m_weight,
    };
    let mismatched = build_acc_system(params, settings.nominal_drag, lead_schedule);
    let (mut controller, diagnostics) = match kind {
        ScenarioKind::TrueDynamics => (SafeController::new(true_system(params), clf, cbf, law), None),
        ScenarioKind::MismatchedDynamics => (SafeController::new(mismatched, clf, cbf, law), None),
        ScenarioKind::GpLearned => {
            let (data, posterior) = learn_residual(params, settings)?;
            let beta = beta_values(&settings.gp.error_bound, data.len())?;
            let diagnostics = posterior.diagnostics();
            let gp = GpCorrection {
                posterior: Arc::new(posterior),
                beta,
                mode: settings.gp.margin_mode,
            };
            (SafeController::new(mismatched, clf, cbf, law).with_gp(gp), Some(diagnostics))
        }
    };
    if let Some(fraction) = settings.limit_fraction {
        controller = controller.with_limits(ControlLimits::symmetric(1, fraction * params.weight())?);
    }
    Ok((controller, diagnostics))
}

/// Runs one scenario on the true plant.
pub fn run_scenario(kind: ScenarioKind, params: &AccParams, settings: &ScenarioSettings) -> ScenarioOutcome {
    let start = Instant::now();
    let plant = true_plant(params, settings.nominal_drag);
    let (log, error, gp_diagnostics) = match build_controller(kind, params, settings) {
        Err(e) => (TrajectoryLog::default(), Some(e.to_string()), None),
        Ok((controller, diagnostics)) => {
            match simulate(&plant, &controller, &params.initial_state(), settings.horizon, settings.dt) {
                Ok(log) => (log, None, diagnostics),
                Err(aborted) => (aborted.log, Some(aborted.error.to_string()), diagnostics),
            }
        }
    };
    let mut metrics = Metrics::from_log(&log, params);
    metrics.error = error;
    metrics.runtime_s = Some(start.elapsed().as_secs_f64());
    ScenarioOutcome {
        kind,
        log,
        metrics,
        gp_diagnostics,
    }
}
