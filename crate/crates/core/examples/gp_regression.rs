//! Learn a 1-D residual from noisy samples, pick hyperparameters on a grid
//! and check the confidence tube at a few points.

use safe_universal::dynamics::{Matrix, Vector};
use safe_universal::gp::{beta_values, fit_posterior, grid_search, ErrorBoundConfig, KernelConfig, ResidualDataset};
use safe_universal::Result;

fn truth(x: f64) -> f64 {
    0.5 * (1.5 * x).sin() + 0.1 * x
}

fn main() -> Result<()> {
    let noise = 0.02;
    // deterministic pseudo-noise so the output is stable
    let xs: Vec<f64> = (0..40).map(|i| -3.0 + 6.0 * i as f64 / 39.0).collect();
    let ys: Vec<f64> = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| truth(x) + noise * ((i * 7919 % 13) as f64 / 6.0 - 1.0))
        .collect();
    let inputs = xs.iter().map(|&x| Vector::from_element(1, x)).collect();
    let data = ResidualDataset::new(inputs, Matrix::from_column_slice(40, 1, &ys), noise)?;

    let base = KernelConfig::squared_exponential(1.0, vec![1.0]);
    let (kernel, lml) = grid_search(&data, &base, &[0.1, 0.3, 1.0, 3.0], &[0.3, 0.5, 1.0, 2.0])?;
    println!("kernel: variance {} lengthscale {:?} (log ML {lml:.2})", kernel.signal_variance, kernel.lengthscales);

    let post = fit_posterior(&data, &kernel)?;
    let beta = beta_values(&ErrorBoundConfig::with_override(vec![3.0]), data.len())?;
    println!("fit diagnostics: {:?}", post.diagnostics()[0]);
    for x in [-4.0, -2.2, 0.0, 1.3, 2.9, 5.0] {
        let (m, s) = post.predict(&Vector::from_element(1, x))?;
        let inside = (truth(x) - m[0]).abs() <= beta[0] * s[0];
        println!("x = {x:+.1}  mean {:+.4}  std {:.4}  truth {:+.4}  in tube: {inside}", m[0], s[0], truth(x));
    }

    let path = std::env::temp_dir().join("gp_regression_example.csv");
    data.write_csv(&path)?;
    let back = ResidualDataset::read_csv(&path, noise)?;
    println!("round-tripped {} samples through {}", back.len(), path.display());
    Ok(())
}
