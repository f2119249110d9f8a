//! Independent per-coordinate Gaussian-process regression of the residual
//! dynamics `ω(x)`, with the confidence scalars that bound its error.

use std::path::Path;

use nalgebra::linalg::Cholesky;
use nalgebra::Dyn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dynamics::{check_dim, check_finite, ControlAffineSystem, Matrix, Vector};
use crate::error::{Error, Result};

/// Relative jitter schedule: `jitter = factor · signal_variance`. The first
/// attempt adds nothing beyond the noise variance.
const JITTER_SCHEDULE: [f64; 8] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4];
/// Factorizations whose `(max Lᵢᵢ / min Lᵢᵢ)²` exceeds this are rejected.
const MAX_CONDITION: f64 = 1e14;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    #[default]
    SquaredExponential,
    /// Reserved; fitting with it is rejected.
    Matern52,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    #[serde(default)]
    pub kind: KernelKind,
    pub signal_variance: f64,
    pub lengthscales: Vec<f64>,
}

impl KernelConfig {
    pub fn squared_exponential(signal_variance: f64, lengthscales: Vec<f64>) -> Self {
        Self {
            kind: KernelKind::SquaredExponential,
            signal_variance,
            lengthscales,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.kind != KernelKind::SquaredExponential {
            return Err(Error::Config(format!("kernel {:?} is not supported", self.kind)));
        }
        if !(self.signal_variance > 0.0 && self.signal_variance.is_finite()) {
            return Err(Error::Config(format!(
                "signal variance must be positive, got {}",
                self.signal_variance
            )));
        }
        if self.lengthscales.len() != dim {
            return Err(Error::Config(format!(
                "expected {dim} lengthscales, got {}",
                self.lengthscales.len()
            )));
        }
        if let Some(l) = self.lengthscales.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::Config(format!("lengthscales must be positive, got {l}")));
        }
        Ok(())
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let r2: f64 = x
            .iter()
            .zip(y)
            .zip(&self.lengthscales)
            .map(|((a, b), l)| {
                let s = (a - b) / l;
                s * s
            })
            .sum();
        self.signal_variance * (-0.5 * r2).exp()
    }
}

/// `σ_f²·exp(−½ Σⱼ ((xⱼ − x′ⱼ)/ℓⱼ)²)`.
pub fn kernel_eval(cfg: &KernelConfig, x: &Vector, x2: &Vector) -> Result<f64> {
    cfg.validate(x.len())?;
    check_dim("kernel argument", x.len(), x2.len())?;
    Ok(cfg.eval(x.as_slice(), x2.as_slice()))
}

/// Measured residuals `y⁽q⁾ = ω(x⁽q⁾) + ε⁽q⁾`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualDataset {
    pub inputs: Vec<Vector>,
    /// `Q × n`, one row per sample.
    pub targets: Matrix,
    pub noise_std: f64,
}

impl ResidualDataset {
    pub fn new(inputs: Vec<Vector>, targets: Matrix, noise_std: f64) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::Precondition("dataset needs at least one sample".into()));
        }
        check_dim("dataset rows", inputs.len(), targets.nrows())?;
        let n = inputs[0].len();
        for x in &inputs {
            check_dim("dataset input", n, x.len())?;
            check_finite("dataset input", x.iter())?;
        }
        check_dim("dataset target columns", n, targets.ncols())?;
        check_finite("dataset targets", targets.iter())?;
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(Error::Precondition(format!("noise std must be ≥ 0, got {noise_std}")));
        }
        Ok(Self {
            inputs,
            targets,
            noise_std,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.targets.ncols()
    }

    /// Writes `x_1..x_n,y_1..y_n` with a header row.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        let n = self.state_dim();
        let header: Vec<String> = (1..=n)
            .map(|i| format!("x_{i}"))
            .chain((1..=n).map(|i| format!("y_{i}")))
            .collect();
        w.write_record(&header).map_err(csv_err)?;
        for (q, x) in self.inputs.iter().enumerate() {
            let row: Vec<String> = x
                .iter()
                .chain(self.targets.row(q).iter())
                .map(|v| v.to_string())
                .collect();
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a dataset written by [`ResidualDataset::write_csv`].
    pub fn read_csv(path: impl AsRef<Path>, noise_std: f64) -> Result<Self> {
        let path = path.as_ref();
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
        let header = r.headers().map_err(csv_err)?.clone();
        let cols = header.len();
        if cols == 0 || cols % 2 != 0 {
            return Err(Error::Config(format!(
                "{}: expected an even number of columns x_1..x_n,y_1..y_n, got {cols}",
                path.display()
            )));
        }
        let n = cols / 2;
        for (i, name) in header.iter().enumerate() {
            let expected = if i < n {
                format!("x_{}", i + 1)
            } else {
                format!("y_{}", i - n + 1)
            };
            if name.trim() != expected {
                return Err(Error::Config(format!(
                    "{}: column {} should be {expected:?}, found {name:?}",
                    path.display(),
                    i + 1
                )));
            }
        }
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        for record in r.records() {
            let record = record.map_err(csv_err)?;
            let values = record
                .iter()
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|e| {
                        Error::Config(format!("{}: bad number {s:?}: {e}", path.display()))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            inputs.push(Vector::from_row_slice(&values[..n]));
            targets.extend_from_slice(&values[n..]);
        }
        let q = inputs.len();
        Self::new(inputs, Matrix::from_row_slice(q, n, &targets), noise_std)
    }
}

/// One recorded transition used to build a residual measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub state: Vector,
    pub state_dot: Vector,
    pub input: Vector,
    /// Time at which the drift is evaluated (matters for exogenous inputs).
    pub time: f64,
}

/// `y = ẋ − f(x) − g(x)·u + ε` with `ε ~ N(0, noise_std²)` drawn from a
/// ChaCha generator seeded by `seed`.
pub fn build_measurements(
    samples: &[Sample],
    nominal: &ControlAffineSystem,
    noise_std: f64,
    seed: u64,
) -> Result<ResidualDataset> {
    if samples.is_empty() {
        return Err(Error::Precondition("no samples to build measurements from".into()));
    }
    let n = nominal.state_dim();
    let noise = if noise_std > 0.0 {
        Some(Normal::new(0.0, noise_std).map_err(|e| Error::Precondition(e.to_string()))?)
    } else {
        None
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut targets = Matrix::zeros(samples.len(), n);
    for (q, s) in samples.iter().enumerate() {
        check_dim("sample derivative", n, s.state_dot.len())?;
        let f = nominal.drift(&s.state, s.time)?;
        let g = nominal.input_map(&s.state)?;
        let mut y = &s.state_dot - f - g * &s.input;
        if let Some(dist) = &noise {
            for v in y.iter_mut() {
                *v += dist.sample(&mut rng);
            }
        }
        targets.set_row(q, &y.transpose());
    }
    ResidualDataset::new(samples.iter().map(|s| s.state.clone()).collect(), targets, noise_std)
}

/// Factored `K + (σ_ε² + jitter)·I` for one kernel.
#[derive(Debug, Clone)]
struct Factor {
    kernel: KernelConfig,
    chol: Cholesky<f64, Dyn>,
    lower: Matrix,
    jitter: f64,
    condition: f64,
}

#[derive(Debug, Clone)]
struct CoordinateModel {
    factor: usize,
    weights: Vector,
    log_marginal_likelihood: f64,
}

/// Per-factor fit diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitDiagnostics {
    /// Extra diagonal added to reach a usable factorization.
    pub jitter: f64,
    /// `(max Lᵢᵢ / min Lᵢᵢ)²`.
    pub condition_estimate: f64,
}

impl FitDiagnostics {
    pub fn jitter_rescued(&self) -> bool {
        self.jitter > 0.0
    }
}

/// Fitted posterior for every coordinate of `ω`. Coordinates that share a
/// kernel share one factorization.
#[derive(Debug, Clone)]
pub struct GpPosterior {
    inputs: Vec<Vec<f64>>,
    input_dim: usize,
    noise_std: f64,
    factors: Vec<Factor>,
    coords: Vec<CoordinateModel>,
}

/// Fits all coordinates with the same kernel.
pub fn fit_posterior(data: &ResidualDataset, cfg: &KernelConfig) -> Result<GpPosterior> {
    let cfgs = vec![cfg.clone(); data.state_dim()];
    fit_posterior_per_coordinate(data, &cfgs)
}

pub fn fit_posterior_per_coordinate(data: &ResidualDataset, cfgs: &[KernelConfig]) -> Result<GpPosterior> {
    let n = data.state_dim();
    check_dim("kernel configs", n, cfgs.len())?;
    let q = data.len();
    let input_dim = data.inputs[0].len();
    let inputs: Vec<Vec<f64>> = data.inputs.iter().map(|x| x.as_slice().to_vec()).collect();

    let mut factors: Vec<Factor> = Vec::new();
    let mut coords = Vec::with_capacity(n);
    for (i, cfg) in cfgs.iter().enumerate() {
        cfg.validate(input_dim)?;
        let idx = match factors.iter().position(|f| &f.kernel == cfg) {
            Some(idx) => idx,
            None => {
                factors.push(factorize(&inputs, cfg, data.noise_std)?);
                factors.len() - 1
            }
        };
        let y = data.targets.column(i).into_owned();
        let factor = &factors[idx];
        let weights = factor.chol.solve(&y);
        let log_det: f64 = factor.lower.diagonal().iter().map(|d| d.ln()).sum();
        let lml = -0.5 * y.dot(&weights) - log_det - 0.5 * q as f64 * (2.0 * std::f64::consts::PI).ln();
        coords.push(CoordinateModel {
            factor: idx,
            weights,
            log_marginal_likelihood: lml,
        });
    }
    Ok(GpPosterior {
        inputs,
        input_dim,
        noise_std: data.noise_std,
        factors,
        coords,
    })
}

fn gram(rows: &[Vec<f64>], cfg: &KernelConfig) -> Matrix {
    let q = rows.len();
    let mut k = Matrix::zeros(q, q);
    for i in 0..q {
        k[(i, i)] = cfg.signal_variance;
        for j in 0..i {
            let v = cfg.eval(&rows[i], &rows[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

fn factorize(inputs: &[Vec<f64>], cfg: &KernelConfig, noise_std: f64) -> Result<Factor> {
    let base = gram(inputs, cfg);
    let noise_var = noise_std * noise_std;
    let mut last_condition = f64::INFINITY;
    let mut last_jitter = 0.0;
    for factor in JITTER_SCHEDULE {
        let jitter = factor * cfg.signal_variance;
        let mut k = base.clone();
        for i in 0..k.nrows() {
            k[(i, i)] += noise_var + jitter;
        }
        last_jitter = jitter;
        let Some(chol) = Cholesky::new(k) else {
            continue;
        };
        let lower = chol.l();
        let diag = lower.diagonal();
        let (lo, hi) = diag
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
        let condition = (hi / lo).powi(2);
        last_condition = condition;
        if lo > 0.0 && condition.is_finite() && condition <= MAX_CONDITION {
            return Ok(Factor {
                kernel: cfg.clone(),
                chol,
                lower,
                jitter,
                condition,
            });
        }
    }
    Err(Error::IllConditioned {
        condition: last_condition,
        jitter: last_jitter,
    })
}

impl GpPosterior {
    pub fn state_dim(&self) -> usize {
        self.coords.len()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn num_samples(&self) -> usize {
        self.inputs.len()
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    /// Diagnostics of the factorization used by each coordinate.
    pub fn diagnostics(&self) -> Vec<FitDiagnostics> {
        self.coords
            .iter()
            .map(|c| {
                let f = &self.factors[c.factor];
                FitDiagnostics {
                    jitter: f.jitter,
                    condition_estimate: f.condition,
                }
            })
            .collect()
    }

    /// Log marginal likelihood of each coordinate's targets.
    pub fn log_marginal_likelihood(&self) -> Vec<f64> {
        self.coords.iter().map(|c| c.log_marginal_likelihood).collect()
    }

    pub fn kernel(&self, coordinate: usize) -> &KernelConfig {
        &self.factors[self.coords[coordinate].factor].kernel
    }

    /// Posterior mean and standard deviation of every coordinate at `x`.
    pub fn predict(&self, x: &Vector) -> Result<(Vector, Vector)> {
        check_dim("query", self.input_dim(), x.len())?;
        check_finite("query", x.iter())?;
        let q = self.num_samples();
        let xs = x.as_slice();

        let mut per_factor = Vec::with_capacity(self.factors.len());
        for f in &self.factors {
            let kstar = Vector::from_iterator(q, self.inputs.iter().map(|row| f.kernel.eval(row, xs)));
            let v = f
                .lower
                .solve_lower_triangular(&kstar)
                .ok_or(Error::NonFinite("posterior variance solve"))?;
            let prior = f.kernel.signal_variance;
            let var = (prior - v.norm_squared()).max(0.0);
            per_factor.push((kstar, var.sqrt()));
        }

        let n = self.state_dim();
        let mut mean = Vector::zeros(n);
        let mut std = Vector::zeros(n);
        for (i, c) in self.coords.iter().enumerate() {
            let (kstar, s) = &per_factor[c.factor];
            mean[i] = kstar.dot(&c.weights);
            std[i] = *s;
        }
        Ok((mean, std))
    }
}

pub fn predict(posterior: &GpPosterior, x: &Vector) -> Result<(Vector, Vector)> {
    posterior.predict(x)
}

/// Inputs of the error bound `β_i = sqrt(2‖ω_i‖²_k + 300·γ_i·ln³((Q+1)/δ))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorBoundConfig {
    /// Per-coordinate failure probability.
    pub delta: f64,
    #[serde(default)]
    pub rkhs_norms: Vec<f64>,
    #[serde(default)]
    pub information_gains: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_override: Option<Vec<f64>>,
}

impl ErrorBoundConfig {
    pub fn with_override(beta: Vec<f64>) -> Self {
        Self {
            delta: 0.05,
            rkhs_norms: Vec::new(),
            information_gains: Vec::new(),
            beta_override: Some(beta),
        }
    }
}

pub fn beta_values(cfg: &ErrorBoundConfig, num_samples: usize) -> Result<Vector> {
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(Error::Config(format!("delta must lie in (0, 1), got {}", cfg.delta)));
    }
    if let Some(beta) = &cfg.beta_override {
        if beta.iter().any(|b| !(*b >= 0.0)) {
            return Err(Error::Config("beta override entries must be ≥ 0".into()));
        }
        return Ok(Vector::from_row_slice(beta));
    }
    if cfg.rkhs_norms.len() != cfg.information_gains.len() || cfg.rkhs_norms.is_empty() {
        return Err(Error::Config(
            "rkhs_norms and information_gains must be given for every coordinate".into(),
        ));
    }
    if cfg
        .rkhs_norms
        .iter()
        .chain(&cfg.information_gains)
        .any(|v| !(*v >= 0.0))
    {
        return Err(Error::Config("RKHS norms and information gains must be ≥ 0".into()));
    }
    let log_term = ((num_samples as f64 + 1.0) / cfg.delta).ln().powi(3);
    Ok(Vector::from_iterator(
        cfg.rkhs_norms.len(),
        cfg.rkhs_norms
            .iter()
            .zip(&cfg.information_gains)
            .map(|(norm, gain)| (2.0 * norm * norm + 300.0 * gain * log_term).sqrt()),
    ))
}

/// Coarse log-space search over signal variance and a common lengthscale
/// multiplier, maximizing the summed log marginal likelihood.
pub fn grid_search(
    data: &ResidualDataset,
    base: &KernelConfig,
    variances: &[f64],
    lengthscale_scales: &[f64],
) -> Result<(KernelConfig, f64)> {
    let mut best: Option<(KernelConfig, f64)> = None;
    for &sv in variances {
        for &scale in lengthscale_scales {
            let cfg = KernelConfig {
                kind: base.kind,
                signal_variance: sv,
                lengthscales: base.lengthscales.iter().map(|l| l * scale).collect(),
            };
            let Ok(post) = fit_posterior(data, &cfg) else {
                continue;
            };
            let score: f64 = post.log_marginal_likelihood().iter().sum();
            if best.as_ref().is_none_or(|(_, s)| score > *s) {
                best = Some((cfg, score));
            }
        }
    }
    best.ok_or_else(|| Error::Config("no grid point produced a usable fit".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    fn unit_kernel(n: usize) -> KernelConfig {
        KernelConfig::squared_exponential(1.0, vec![1.0; n])
    }

    #[test]
    fn kernel_at_zero_distance_is_signal_variance() {
        let cfg = KernelConfig::squared_exponential(2.5, vec![0.3, 4.0]);
        assert_eq!(kernel_eval(&cfg, &v(&[1.0, -2.0]), &v(&[1.0, -2.0])).unwrap(), 2.5);
    }

    #[test]
    fn kernel_unit_distance() {
        let k = kernel_eval(&unit_kernel(1), &v(&[0.0]), &v(&[1.0])).unwrap();
        assert!((k - (-0.5f64).exp()).abs() < 1e-15);
        assert!((k - 0.606_531).abs() < 1e-6);
    }

    #[test]
    fn kernel_rejects_bad_lengthscale() {
        let cfg = KernelConfig::squared_exponential(1.0, vec![0.0]);
        assert!(matches!(kernel_eval(&cfg, &v(&[0.0]), &v(&[1.0])), Err(Error::Config(_))));
        let cfg = KernelConfig {
            kind: KernelKind::Matern52,
            ..unit_kernel(1)
        };
        assert!(kernel_eval(&cfg, &v(&[0.0]), &v(&[1.0])).is_err());
    }

    fn one_point(noise: f64, y: f64) -> ResidualDataset {
        ResidualDataset::new(vec![v(&[0.5])], Matrix::from_element(1, 1, y), noise).unwrap()
    }

    #[test]
    fn single_point_noiseless_interpolates() {
        let post = fit_posterior(&one_point(0.0, 0.7), &unit_kernel(1)).unwrap();
        let (m, s) = post.predict(&v(&[0.5])).unwrap();
        assert!((m[0] - 0.7).abs() <= 1e-12 * 0.7);
        assert!(s[0] <= 1e-6);
    }

    #[test]
    fn single_point_noisy_shrinks() {
        let (sn, y) = (0.3, 2.0);
        let cfg = KernelConfig::squared_exponential(1.7, vec![1.0]);
        let post = fit_posterior(&one_point(sn, y), &cfg).unwrap();
        let (m, s) = post.predict(&v(&[0.5])).unwrap();
        let expected = 1.7 / (1.7 + sn * sn) * y;
        assert!((m[0] - expected).abs() <= 1e-12);
        let var = 1.7 - 1.7 * 1.7 / (1.7 + sn * sn);
        assert!((s[0] * s[0] - var).abs() <= 1e-12);
    }

    #[test]
    fn duplicate_inputs_are_rescued_or_rejected() {
        let inputs = vec![v(&[0.0, 0.0]), v(&[0.0, 0.0]), v(&[1.0, 1.0])];
        let targets = Matrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 0.0, 2.0, 0.0]);
        let data = ResidualDataset::new(inputs, targets, 0.0).unwrap();
        match fit_posterior(&data, &unit_kernel(2)) {
            Ok(post) => assert!(post.diagnostics().iter().all(|d| d.jitter_rescued())),
            Err(Error::IllConditioned { condition, .. }) => assert!(condition > 0.0),
            Err(other) => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn far_query_reverts_to_prior() {
        let inputs = vec![v(&[0.0]), v(&[1.0]), v(&[2.0])];
        let targets = Matrix::from_row_slice(3, 1, &[1.0, -1.0, 0.5]);
        let data = ResidualDataset::new(inputs, targets.clone(), 0.01).unwrap();
        let post = fit_posterior(&data, &unit_kernel(1)).unwrap();
        let (m, s) = post.predict(&v(&[100.0])).unwrap();
        assert!(m[0].abs() < 1e-6 * targets.norm());
        assert!((s[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn beta_formula_and_override() {
        let cfg = ErrorBoundConfig {
            delta: 0.1,
            rkhs_norms: vec![0.0, 1.0],
            information_gains: vec![0.0, 0.0],
            beta_override: None,
        };
        let b = beta_values(&cfg, 2000).unwrap();
        assert_eq!(b[0], 0.0);
        assert!((b[1] - 2f64.sqrt()).abs() < 1e-15);

        let gain = ErrorBoundConfig {
            delta: 0.5,
            rkhs_norms: vec![1.0],
            information_gains: vec![0.01],
            beta_override: None,
        };
        let expected = (2.0 + 3.0 * (20.0f64).ln().powi(3)).sqrt();
        assert!((beta_values(&gain, 9).unwrap()[0] - expected).abs() < 1e-12);

        let o = ErrorBoundConfig::with_override(vec![2.0, 2.0, 2.0]);
        assert_eq!(beta_values(&o, 10).unwrap(), v(&[2.0, 2.0, 2.0]));
    }

    #[test]
    fn beta_rejects_bad_delta() {
        for delta in [0.0, 1.0, -0.2, 1.5] {
            let cfg = ErrorBoundConfig {
                delta,
                ..ErrorBoundConfig::with_override(vec![1.0])
            };
            assert!(matches!(beta_values(&cfg, 5), Err(Error::Config(_))));
        }
    }

    #[test]
    fn grid_search_prefers_reasonable_lengthscale() {
        let inputs: Vec<Vector> = (0..30).map(|i| v(&[i as f64 * 0.2])).collect();
        let targets = Matrix::from_iterator(30, 1, inputs.iter().map(|x| (x[0]).sin()));
        let data = ResidualDataset::new(inputs, targets, 0.01).unwrap();
        let (best, score) = grid_search(&data, &unit_kernel(1), &[0.1, 1.0, 10.0], &[0.01, 1.0, 100.0]).unwrap();
        assert!(score.is_finite());
        assert_eq!(best.lengthscales, vec![1.0]);
    }
}
