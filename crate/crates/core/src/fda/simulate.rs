//! Simulated scalar-on-function regression data from random cubic B-spline
//! curves.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{bspline_basis, clamped_knots, design_matrix, DataError, FunctionalDataset, Task};
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CoefficientCovariance {
    /// Identity covariance for the spline coefficients.
    Independent,
    /// Stationary covariance `ρ^|i-j|`.
    Correlated { rho: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n_samples: usize,
    pub grid_size: usize,
    pub inner_knots: usize,
    pub knot_range: (f64, f64),
    pub coefficient_covariance: CoefficientCovariance,
    pub noise_sd: f64,
    pub seed: u64,
}

impl SimulationConfig {
    /// 50 curves on 150 grid points, 35 inner knots, independent coefficients.
    pub fn independent(seed: u64) -> Self {
        Self {
            n_samples: 50,
            grid_size: 150,
            inner_knots: 35,
            knot_range: (-0.5, 1.5),
            coefficient_covariance: CoefficientCovariance::Independent,
            noise_sd: 1.0,
            seed,
        }
    }

    /// 50 curves on 150 grid points, 50 inner knots, `ρ = 0.9` correlation.
    pub fn correlated(seed: u64) -> Self {
        Self {
            inner_knots: 50,
            coefficient_covariance: CoefficientCovariance::Correlated { rho: 0.9 },
            ..Self::independent(seed)
        }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |m: &str| Err(DataError::Invalid(format!("simulation config: {m}")));
        if self.n_samples == 0 {
            return bad("n_samples must be positive");
        }
        if self.grid_size < 3 {
            return bad("grid_size must be at least 3");
        }
        if self.inner_knots < 4 {
            return bad("inner_knots must be at least 4");
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return bad("noise_sd must be finite and nonnegative");
        }
        let (lo, hi) = self.knot_range;
        if !(lo <= 0.0 && hi >= 1.0 && lo < hi) {
            return bad("knot_range must contain [0, 1]");
        }
        if let CoefficientCovariance::Correlated { rho } = self.coefficient_covariance {
            if !(rho > -1.0 && rho < 1.0) {
                return bad("rho must lie in (-1, 1)");
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        (1..=self.grid_size)
            .map(|j| j as f64 / self.grid_size as f64)
            .collect()
    }
}

fn raised_cosine(t: f64, lo: f64, hi: f64) -> f64 {
    if t <= lo || t >= hi {
        0.0
    } else {
        0.5 * (1.0 - (2.0 * std::f64::consts::PI * (t - lo) / (hi - lo)).cos())
    }
}

/// Stand-in sparse and smooth coefficient function: two raised-cosine
/// bumps on `[0.1, 0.3]` and `[0.55, 0.8]`, zero elsewhere.
pub fn default_true_beta(grid: &[f64]) -> Vec<f64> {
    grid.iter()
        .map(|&t| 40.0 * raised_cosine(t, 0.1, 0.3) - 30.0 * raised_cosine(t, 0.55, 0.8))
        .collect()
}

/// Draws `N` random spline curves and their responses
/// `y_i = Σ_j x_i(t_j) β(t_j) Δt + ε_i`.
pub fn simulate(config: &SimulationConfig, true_beta: &[f64]) -> Result<FunctionalDataset, DataError> {
    config.validate()?;
    if true_beta.len() != config.grid_size {
        return Err(DataError::GridMismatch {
            expected: config.grid_size,
            found: true_beta.len(),
        });
    }
    let grid = config.grid();
    let (lo, hi) = config.knot_range;
    let knots = clamped_knots(3, config.inner_knots, lo, hi);
    let basis = bspline_basis(3, &knots, &grid)?;
    let k = basis.cols();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut coefs = DenseMatrix::zeros(config.n_samples, k);
    for i in 0..config.n_samples {
        let row = coefs.row_mut(i);
        match config.coefficient_covariance {
            CoefficientCovariance::Independent => {
                for v in row.iter_mut() {
                    *v = StandardNormal.sample(&mut rng);
                }
            }
            CoefficientCovariance::Correlated { rho } => {
                // AR(1) recursion has exactly the ρ^|i-j| covariance
                let innov = (1.0 - rho * rho).sqrt();
                let mut prev: f64 = StandardNormal.sample(&mut rng);
                row[0] = prev;
                for v in row.iter_mut().skip(1) {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    prev = rho * prev + innov * e;
                    *v = prev;
                }
            }
        }
    }
    let curves = coefs.matmul(&basis.transpose());
    let noiseless = FunctionalDataset::new(curves, vec![0.0; config.n_samples], Task::Regression)?;
    let signal = design_matrix(&noiseless).matvec(true_beta);
    let response = signal
        .iter()
        .map(|s| {
            let e: f64 = StandardNormal.sample(&mut rng);
            s + config.noise_sd * e
        })
        .collect();
    Ok(noiseless.with_response(response))
}
