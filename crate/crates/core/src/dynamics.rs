//! Control-affine plants, a fixed-step RK4 integrator and closed-loop
//! trajectory recording.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::clf_cbf::Region;
use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Drift vector field `f(x, t)`.
pub type DriftFn = Arc<dyn Fn(&Vector, f64) -> Vector + Send + Sync>;
/// Input matrix `g(x)`, shape `n × m`.
pub type InputMapFn = Arc<dyn Fn(&Vector) -> Matrix + Send + Sync>;
/// Time signal attached to a system (e.g. the lead-vehicle acceleration).
pub type SignalFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// State map `x ↦ ω(x)`.
pub type StateMapFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;

/// `ẋ = f(x, t) + g(x)·u`.
#[derive(Clone)]
pub struct ControlAffineSystem {
    state_dim: usize,
    input_dim: usize,
    drift: DriftFn,
    input_map: InputMapFn,
    exogenous: Option<SignalFn>,
}

impl ControlAffineSystem {
    pub fn new(
        state_dim: usize,
        input_dim: usize,
        drift: impl Fn(&Vector, f64) -> Vector + Send + Sync + 'static,
        input_map: impl Fn(&Vector) -> Matrix + Send + Sync + 'static,
    ) -> Self {
        assert!(state_dim > 0 && input_dim > 0, "system dimensions must be positive");
        Self {
            state_dim,
            input_dim,
            drift: Arc::new(drift),
            input_map: Arc::new(input_map),
            exogenous: None,
        }
    }

    /// Attaches a logged exogenous signal. The signal is for bookkeeping only;
    /// the drift closure is responsible for using it.
    pub fn with_exogenous(mut self, signal: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.exogenous = Some(Arc::new(signal));
        self
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn drift(&self, x: &Vector, t: f64) -> Result<Vector> {
        check_dim("state", self.state_dim, x.len())?;
        let f = (self.drift)(x, t);
        check_dim("drift", self.state_dim, f.len())?;
        check_finite("drift", f.iter())?;
        Ok(f)
    }

    pub fn input_map(&self, x: &Vector) -> Result<Matrix> {
        check_dim("state", self.state_dim, x.len())?;
        let g = (self.input_map)(x);
        check_dim("input map rows", self.state_dim, g.nrows())?;
        check_dim("input map columns", self.input_dim, g.ncols())?;
        check_finite("input map", g.iter())?;
        Ok(g)
    }

    pub fn exogenous(&self, t: f64) -> Option<f64> {
        self.exogenous.as_ref().map(|s| s(t))
    }
}

impl fmt::Debug for ControlAffineSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlAffineSystem")
            .field("state_dim", &self.state_dim)
            .field("input_dim", &self.input_dim)
            .field("exogenous", &self.exogenous.is_some())
            .finish()
    }
}

/// Nominal model plus an unmodeled state-dependent disturbance,
/// `ẋ = f(x) + g(x)·u + ω(x)`.
///
/// The disturbance is the ground truth used by the simulator and the data
/// generator. Controllers never see it.
#[derive(Clone)]
pub struct UncertainSystem {
    pub nominal: ControlAffineSystem,
    disturbance: StateMapFn,
}

impl UncertainSystem {
    pub fn new(
        nominal: ControlAffineSystem,
        disturbance: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
    ) -> Self {
        Self {
            nominal,
            disturbance: Arc::new(disturbance),
        }
    }

    pub fn disturbance(&self, x: &Vector) -> Result<Vector> {
        let n = self.nominal.state_dim();
        check_dim("state", n, x.len())?;
        let w = (self.disturbance)(x);
        check_dim("disturbance", n, w.len())?;
        check_finite("disturbance", w.iter())?;
        Ok(w)
    }
}

impl fmt::Debug for UncertainSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UncertainSystem")
            .field("nominal", &self.nominal)
            .finish_non_exhaustive()
    }
}

/// Anything that can be integrated forward under an input.
pub trait Plant {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    /// Open-loop vector field at `(x, u, t)`.
    fn field(&self, x: &Vector, u: &Vector, t: f64) -> Result<Vector>;
    fn exogenous(&self, t: f64) -> Option<f64>;
}

impl Plant for ControlAffineSystem {
    fn state_dim(&self) -> usize {
        self.state_dim
    }

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn field(&self, x: &Vector, u: &Vector, t: f64) -> Result<Vector> {
        check_dim("control", self.input_dim, u.len())?;
        let f = self.drift(x, t)?;
        let g = self.input_map(x)?;
        Ok(f + g * u)
    }

    fn exogenous(&self, t: f64) -> Option<f64> {
        ControlAffineSystem::exogenous(self, t)
    }
}

impl Plant for UncertainSystem {
    fn state_dim(&self) -> usize {
        self.nominal.state_dim
    }

    fn input_dim(&self) -> usize {
        self.nominal.input_dim
    }

    fn field(&self, x: &Vector, u: &Vector, t: f64) -> Result<Vector> {
        Ok(self.nominal.field(x, u, t)? + self.disturbance(x)?)
    }

    fn exogenous(&self, t: f64) -> Option<f64> {
        self.nominal.exogenous(t)
    }
}

/// A control sample plus the diagnostics the trajectory log records.
#[derive(Debug, Clone)]
pub struct ControlOutput {
    pub u: Vector,
    pub clf_value: f64,
    pub cbf_value: f64,
    pub region: Option<Region>,
    pub delta_v: f64,
    pub delta_h: f64,
}

impl ControlOutput {
    /// Bare input without diagnostics: values are NaN, margins are zero.
    pub fn bare(u: Vector) -> Self {
        Self {
            u,
            clf_value: f64::NAN,
            cbf_value: f64::NAN,
            region: None,
            delta_v: 0.0,
            delta_h: 0.0,
        }
    }
}

/// State-feedback law. Time is passed so that drift terms with exogenous
/// inputs can be evaluated; a controller never reads plant internals.
pub trait Controller {
    fn control(&self, x: &Vector, t: f64) -> Result<ControlOutput>;
}

impl<F> Controller for F
where
    F: Fn(&Vector, f64) -> Result<Vector>,
{
    fn control(&self, x: &Vector, t: f64) -> Result<ControlOutput> {
        self(x, t).map(ControlOutput::bare)
    }
}

/// Closed-loop vector field `f(x) + g(x)·u(x) [+ ω(x)]`.
pub fn closed_loop_field<P, C>(system: &P, controller: &C, x: &Vector, t: f64) -> Result<Vector>
where
    P: Plant + ?Sized,
    C: Controller + ?Sized,
{
    check_finite("state", x.iter())?;
    let out = controller.control(x, t)?;
    check_dim("controller output", system.input_dim(), out.u.len())?;
    system.field(x, &out.u, t)
}

/// One classical Runge–Kutta step of `ẋ = field(x, t)` over `[t, t + dt]`.
pub fn rk4_step<F>(field: F, x: &Vector, t: f64, dt: f64) -> Result<Vector>
where
    F: Fn(&Vector, f64) -> Result<Vector>,
{
    if !(dt > 0.0) {
        return Err(Error::Precondition(format!("step size must be positive, got {dt}")));
    }
    let half = 0.5 * dt;
    let stage = |k: &Vector, idx: usize| -> Result<()> {
        if k.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Integration { stage: idx, time: t })
        }
    };

    let k1 = field(x, t)?;
    stage(&k1, 1)?;
    let k2 = field(&(x + &k1 * half), t + half)?;
    stage(&k2, 2)?;
    let k3 = field(&(x + &k2 * half), t + half)?;
    stage(&k3, 3)?;
    let k4 = field(&(x + &k3 * dt), t + dt)?;
    stage(&k4, 4)?;

    let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    check_finite("integrated state", next.iter())?;
    Ok(next)
}

/// Time-indexed record of a closed-loop run. All columns share one length.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryLog {
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    pub controls: Vec<Vector>,
    pub clf_values: Vec<f64>,
    pub cbf_values: Vec<f64>,
    pub regions: Vec<Option<Region>>,
    pub exogenous_values: Vec<f64>,
    pub delta_v: Vec<f64>,
    pub delta_h: Vec<f64>,
}

impl TrajectoryLog {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn push(&mut self, t: f64, x: &Vector, out: ControlOutput, exogenous: f64) {
        self.times.push(t);
        self.states.push(x.clone());
        self.controls.push(out.u);
        self.clf_values.push(out.clf_value);
        self.cbf_values.push(out.cbf_value);
        self.regions.push(out.region);
        self.exogenous_values.push(exogenous);
        self.delta_v.push(out.delta_v);
        self.delta_h.push(out.delta_h);
    }

    /// Extracts one state coordinate over time.
    pub fn state_trace(&self, coordinate: usize) -> Vec<f64> {
        self.states.iter().map(|x| x[coordinate]).collect()
    }

    /// Extracts one input coordinate over time.
    pub fn control_trace(&self, coordinate: usize) -> Vec<f64> {
        self.controls.iter().map(|u| u[coordinate]).collect()
    }
}

/// A simulation that stopped early. Carries the samples logged so far.
#[derive(Debug)]
pub struct SimulationAborted {
    pub log: TrajectoryLog,
    pub error: Error,
}

impl fmt::Display for SimulationAborted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "simulation aborted after {} samples: {}", self.log.len(), self.error)
    }
}

impl std::error::Error for SimulationAborted {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Number of integration steps for a horizon, `⌊horizon/dt⌋`.
pub fn step_count(horizon: f64, dt: f64) -> usize {
    // guard against 70/0.01 = 6999.999…
    (horizon / dt + 1e-9).floor() as usize
}

/// Runs the closed loop from `x0` with a zero-order hold on the control.
///
/// Produces `⌊horizon/dt⌋ + 1` samples at `t_k = k·dt`. The controller is
/// evaluated at every sample (including the last one, for logging).
pub fn simulate<P, C>(
    plant: &P,
    controller: &C,
    x0: &Vector,
    horizon: f64,
    dt: f64,
) -> std::result::Result<TrajectoryLog, SimulationAborted>
where
    P: Plant + ?Sized,
    C: Controller + ?Sized,
{
    let mut log = TrajectoryLog::default();
    let abort = |log: TrajectoryLog, error: Error| SimulationAborted { log, error };

    if !(horizon > 0.0) || !(dt > 0.0) {
        return Err(abort(
            log,
            Error::Precondition(format!("horizon ({horizon}) and dt ({dt}) must be positive")),
        ));
    }
    if x0.len() != plant.state_dim() {
        return Err(abort(
            log,
            Error::DimensionMismatch {
                context: "initial state",
                expected: plant.state_dim(),
                actual: x0.len(),
            },
        ));
    }
    if let Err(e) = check_finite("initial state", x0.iter()) {
        return Err(abort(log, e));
    }

    let steps = step_count(horizon, dt);
    let mut x = x0.clone();
    for k in 0..=steps {
        let t = k as f64 * dt;
        let out = match controller.control(&x, t) {
            Ok(out) => out,
            Err(e) => return Err(abort(log, e)),
        };
        if out.u.len() != plant.input_dim() {
            let e = Error::DimensionMismatch {
                context: "controller output",
                expected: plant.input_dim(),
                actual: out.u.len(),
            };
            return Err(abort(log, e));
        }
        let u = out.u.clone();
        log.push(t, &x, out, plant.exogenous(t).unwrap_or(f64::NAN));
        if k == steps {
            break;
        }
        x = match rk4_step(|y, s| plant.field(y, &u, s), &x, t, dt) {
            Ok(next) => next,
            Err(e) => return Err(abort(log, e)),
        };
    }
    Ok(log)
}

pub(crate) fn check_dim(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        })
    }
}

pub(crate) fn check_finite<'a>(
    context: &'static str,
    mut values: impl Iterator<Item = &'a f64>,
) -> Result<()> {
    if values.all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(context))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> Vector {
        Vector::from_element(1, v)
    }

    fn scalar_system(drift: impl Fn(f64) -> f64 + Send + Sync + 'static) -> ControlAffineSystem {
        ControlAffineSystem::new(
            1,
            1,
            move |x, _| scalar(drift(x[0])),
            |_| Matrix::from_element(1, 1, 1.0),
        )
    }

    fn zero_control(_: &Vector, _: f64) -> Result<Vector> {
        Ok(scalar(0.0))
    }

    #[test]
    fn zero_field_is_zero() {
        let sys = scalar_system(|_| 0.0);
        let v = closed_loop_field(&sys, &zero_control, &scalar(1.0), 0.0).unwrap();
        assert_eq!(v[0], 0.0);
    }

    #[test]
    fn pure_drift() {
        let sys = scalar_system(|x| -x);
        let v = closed_loop_field(&sys, &zero_control, &scalar(2.0), 0.0).unwrap();
        assert_eq!(v[0], -2.0);
    }

    #[test]
    fn controller_dimension_mismatch_is_reported() {
        let sys = scalar_system(|x| -x);
        let bad = |_: &Vector, _: f64| -> Result<Vector> { Ok(Vector::zeros(2)) };
        let err = closed_loop_field(&sys, &bad, &scalar(2.0), 0.0).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn rk4_identity_on_zero_field() {
        let x = Vector::from_vec(vec![1.0, 2.0]);
        let next = rk4_step(|_, _| Ok(Vector::zeros(2)), &x, 0.0, 0.1).unwrap();
        assert_eq!(next, x);
    }

    #[test]
    fn rk4_matches_exponential() {
        let next = rk4_step(|x, _| Ok(x.clone()), &scalar(1.0), 0.0, 0.1).unwrap();
        // local error of RK4 on x' = x is dt^5/120
        assert!((next[0] - 0.1f64.exp()).abs() < 1e-7);
        assert!((next[0] - 1.105_170_83).abs() < 1e-8);
    }

    #[test]
    fn rk4_exact_for_linear_time() {
        let next = rk4_step(|_, t| Ok(scalar(t)), &scalar(0.0), 0.0, 1.0).unwrap();
        assert_eq!(next[0], 0.5);
    }

    #[test]
    fn rk4_names_failing_stage() {
        // blows up only once the stage time passes 0.04
        let field = |_: &Vector, t: f64| Ok(scalar(if t > 0.04 { f64::NAN } else { 1.0 }));
        let err = rk4_step(field, &scalar(0.0), 0.0, 0.1).unwrap_err();
        assert!(matches!(err, Error::Integration { stage: 2, .. }), "{err}");
    }

    #[test]
    fn rk4_rejects_non_positive_step() {
        assert!(rk4_step(|x, _| Ok(x.clone()), &scalar(1.0), 0.0, 0.0).is_err());
    }

    #[test]
    fn sample_count_and_times() {
        let sys = scalar_system(|_| 0.0);
        let log = simulate(&sys, &zero_control, &scalar(1.0), 1.0, 0.5).unwrap();
        assert_eq!(log.len(), 3);
        assert_eq!(log.times, vec![0.0, 0.5, 1.0]);
        assert_eq!(step_count(70.0, 0.01), 7000);
    }

    #[test]
    fn stable_scalar_decay() {
        let sys = scalar_system(|x| -x);
        let log = simulate(&sys, &zero_control, &scalar(1.0), 5.0, 0.01).unwrap();
        let last = log.states.last().unwrap()[0];
        assert!((last - (-5.0f64).exp()).abs() < 1e-4);
    }

    #[test]
    fn zero_dynamics_leave_state_untouched() {
        let sys = ControlAffineSystem::new(2, 1, |_, _| Vector::zeros(2), |_| Matrix::zeros(2, 1));
        let x0 = Vector::from_vec(vec![0.3, -7.25]);
        let ctrl = |_: &Vector, _: f64| Ok(Vector::zeros(1));
        let log = simulate(&sys, &ctrl, &x0, 2.0, 0.1).unwrap();
        assert!(log.states.iter().all(|x| *x == x0));
    }

    #[test]
    fn controller_failure_returns_partial_log() {
        let sys = scalar_system(|x| -x);
        let ctrl = |_: &Vector, t: f64| -> Result<Vector> {
            if t > 0.25 {
                Err(Error::Precondition("boom".into()))
            } else {
                Ok(scalar(0.0))
            }
        };
        let aborted = simulate(&sys, &ctrl, &scalar(1.0), 1.0, 0.1).unwrap_err();
        assert_eq!(aborted.log.len(), 3);
        assert!(matches!(aborted.error, Error::Precondition(_)));
    }

    #[test]
    fn diverging_state_aborts() {
        let sys = scalar_system(|x| x * x);
        let aborted = simulate(&sys, &zero_control, &scalar(10.0), 5.0, 0.1).unwrap_err();
        assert!(!aborted.log.is_empty());
        assert!(matches!(
            aborted.error,
            Error::Integration { .. } | Error::NonFinite(_)
        ));
    }

    #[test]
    fn uncertain_field_is_nominal_plus_disturbance() {
        let nominal = scalar_system(|x| -x);
        let sys = UncertainSystem::new(nominal.clone(), |x| scalar(0.5 * x[0].sin()));
        let ctrl = |x: &Vector, _: f64| Ok(scalar(0.1 * x[0]));
        let x = scalar(0.7);
        let total = closed_loop_field(&sys, &ctrl, &x, 0.0).unwrap();
        let base = closed_loop_field(&nominal, &ctrl, &x, 0.0).unwrap();
        assert_eq!(total[0], base[0] + 0.5 * 0.7f64.sin());
    }
}
