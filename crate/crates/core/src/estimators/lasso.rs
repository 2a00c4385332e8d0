//! Lasso by cyclic coordinate descent, plus the adaptive and relaxed
//! variants. The objective is `‖y - Aβ‖² + λΣ|βⱼ|` (no `1/2N` factor).

use super::{
    check_lambda, check_vector, Centered, Estimator, FitError, FitFlag, Hyperparams, LinearFit,
};
use crate::linalg::DenseMatrix;

pub const LASSO_MAX_SWEEPS: usize = 100_000;
/// Stop once no coordinate moves by more than this in a full sweep.
const LASSO_TOL: f64 = 1e-12;
const EXCLUDE_BELOW: f64 = 1e-10;

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Coordinate descent on already-centered data, warm-started at `beta`.
/// Returns `false` when the sweep cap was hit.
pub(crate) fn lasso_cd(a: &DenseMatrix, y: &[f64], lambda: f64, beta: &mut [f64]) -> bool {
    let (n, p) = (a.rows(), a.cols());
    let cols: Vec<Vec<f64>> = (0..p).map(|j| a.column(j)).collect();
    let norms: Vec<f64> = cols.iter().map(|c| crate::linalg::dot(c, c)).collect();
    let mut r: Vec<f64> = y.to_vec();
    for (j, b) in beta.iter().enumerate() {
        if *b != 0.0 {
            crate::linalg::axpy(-b, &cols[j], &mut r);
        }
    }
    debug_assert_eq!(r.len(), n);
    for _ in 0..LASSO_MAX_SWEEPS {
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            if norms[j] == 0.0 {
                beta[j] = 0.0;
                continue;
            }
            let old = beta[j];
            let rho = crate::linalg::dot(&cols[j], &r) + norms[j] * old;
            let new = soft_threshold(rho, lambda / 2.0) / norms[j];
            if new != old {
                crate::linalg::axpy(old - new, &cols[j], &mut r);
                beta[j] = new;
                max_change = max_change.max((new - old).abs());
            }
        }
        if max_change < LASSO_TOL {
            return true;
        }
    }
    false
}

fn finish(
    estimator: Estimator,
    hyperparams: Hyperparams,
    c: &Centered,
    beta: Vec<f64>,
    flags: Vec<FitFlag>,
) -> LinearFit {
    LinearFit {
        estimator,
        hyperparams,
        intercept: c.intercept(&beta),
        beta,
        flags,
    }
}

pub fn fit_lasso(a: &DenseMatrix, y: &[f64], lambda: f64) -> Result<LinearFit, FitError> {
    check_lambda(lambda, true)?;
    let c = Centered::new(a, y)?;
    let mut beta = vec![0.0; a.cols()];
    let converged = lasso_cd(&c.a, &c.y, lambda, &mut beta);
    let flags = if converged { vec![] } else { vec![FitFlag::SweepLimit] };
    Ok(finish(Estimator::Lasso, Hyperparams::lambda(lambda), &c, beta, flags))
}

/// Lasso with weights `1/|initialⱼ|^γ`, solved by rescaling the columns.
/// Coordinates with a (numerically) zero initial estimate are dropped.
pub fn fit_adaptive_lasso(
    a: &DenseMatrix,
    y: &[f64],
    lambda: f64,
    gamma: f64,
    initial: &[f64],
) -> Result<LinearFit, FitError> {
    check_lambda(lambda, true)?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(FitError::Invalid(format!("gamma must be positive, got {gamma}")));
    }
    check_vector("initial", initial, a.cols())?;
    let keep: Vec<usize> = (0..a.cols()).filter(|&j| initial[j].abs() >= EXCLUDE_BELOW).collect();
    if keep.is_empty() {
        return Err(FitError::AllWeightsInfinite);
    }
    let c = Centered::new(a, y)?;
    let scale: Vec<f64> = keep.iter().map(|&j| initial[j].abs().powf(gamma)).collect();
    let scaled = c.a.select_columns(&keep).scale_columns(&scale);
    let mut inner = vec![0.0; keep.len()];
    let converged = lasso_cd(&scaled, &c.y, lambda, &mut inner);
    let mut beta = vec![0.0; a.cols()];
    for (k, &j) in keep.iter().enumerate() {
        beta[j] = inner[k] * scale[k];
    }
    let hyperparams = Hyperparams {
        gamma: Some(gamma),
        ..Hyperparams::lambda(lambda)
    };
    let flags = if converged { vec![] } else { vec![FitFlag::SweepLimit] };
    Ok(finish(Estimator::AdaptiveLasso, hyperparams, &c, beta, flags))
}

/// Lasso at `λ` to pick the active set, then lasso at `φλ` on that set only.
pub fn fit_relaxed_lasso(
    a: &DenseMatrix,
    y: &[f64],
    lambda: f64,
    phi_relax: f64,
) -> Result<LinearFit, FitError> {
    check_lambda(lambda, true)?;
    if !(phi_relax > 0.0 && phi_relax <= 1.0) {
        return Err(FitError::Invalid(format!("phi_relax must lie in (0, 1], got {phi_relax}")));
    }
    let c = Centered::new(a, y)?;
    let hyperparams = Hyperparams {
        phi_relax: Some(phi_relax),
        ..Hyperparams::lambda(lambda)
    };
    let mut first = vec![0.0; a.cols()];
    let mut converged = lasso_cd(&c.a, &c.y, lambda, &mut first);
    let active: Vec<usize> = (0..a.cols()).filter(|&j| first[j] != 0.0).collect();
    if active.is_empty() {
        let beta = vec![0.0; a.cols()];
        return Ok(finish(Estimator::RelaxedLasso, hyperparams, &c, beta, vec![FitFlag::EmptyActiveSet]));
    }
    let sub = c.a.select_columns(&active);
    let mut inner: Vec<f64> = active.iter().map(|&j| first[j]).collect();
    converged &= lasso_cd(&sub, &c.y, phi_relax * lambda, &mut inner);
    let mut beta = vec![0.0; a.cols()];
    for (k, &j) in active.iter().enumerate() {
        beta[j] = inner[k];
    }
    let flags = if converged { vec![] } else { vec![FitFlag::SweepLimit] };
    Ok(finish(Estimator::RelaxedLasso, hyperparams, &c, beta, flags))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orthonormal() -> (DenseMatrix, Vec<f64>) {
        let a = DenseMatrix::from_rows(&[
            vec![0.5, 0.5, 0.5],
            vec![0.5, -0.5, -0.5],
            vec![-0.5, 0.5, -0.5],
            vec![-0.5, -0.5, 0.5],
        ])
        .unwrap();
        (a, vec![3.0, -1.0, 0.4, -2.4])
    }

    #[test]
    fn orthonormal_soft_threshold() {
        let (a, y) = orthonormal();
        let lambda = 1.0;
        let fit = fit_lasso(&a, &y, lambda).unwrap();
        let aty = a.tr_matvec(&y);
        for (b, t) in fit.beta.iter().zip(&aty) {
            let expect = t.signum() * (t.abs() - lambda / 2.0).max(0.0);
            assert!((b - expect).abs() < 1e-12, "{b} vs {expect}");
        }
    }

    #[test]
    fn full_sparsity_threshold() {
        let (a, y) = super::super::random_problem(12, 5, 1);
        let c = Centered::new(&a, &y).unwrap();
        let lmax = 2.0 * crate::linalg::norm_inf(&c.a.tr_matvec(&c.y));
        // at the threshold itself only summation-order roundoff survives
        assert!(fit_lasso(&a, &y, lmax).unwrap().beta.iter().all(|b| b.abs() < 1e-12));
        assert!(fit_lasso(&a, &y, 1.001 * lmax).unwrap().beta.iter().all(|b| *b == 0.0));
        assert!(fit_lasso(&a, &y, 0.9 * lmax).unwrap().beta.iter().any(|b| *b != 0.0));
    }

    #[test]
    fn zero_initial_coordinate_excluded() {
        let (a, y) = orthonormal();
        let fit = fit_adaptive_lasso(&a, &y, 0.1, 1.0, &[1.0, 0.0, 2.0]).unwrap();
        assert_eq!(fit.beta[1], 0.0);
        assert!(matches!(
            fit_adaptive_lasso(&a, &y, 0.1, 1.0, &[0.0; 3]),
            Err(FitError::AllWeightsInfinite)
        ));
    }

    #[test]
    fn uniform_weights_reduce_to_lasso() {
        let (a, y) = super::super::random_problem(15, 4, 2);
        // every weight is 1/2 = 1/|2|, so λΣ|β|/2 is lasso at λ/2
        let ada = fit_adaptive_lasso(&a, &y, 1.0, 1.0, &[2.0, -2.0, 2.0, 2.0]).unwrap();
        let plain = fit_lasso(&a, &y, 0.5).unwrap();
        for (u, v) in ada.beta.iter().zip(&plain.beta) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn relaxation_of_one_is_plain_lasso() {
        let (a, y) = super::super::random_problem(20, 6, 3);
        let relaxed = fit_relaxed_lasso(&a, &y, 0.5, 1.0).unwrap();
        let plain = fit_lasso(&a, &y, 0.5).unwrap();
        assert!(plain.beta.iter().filter(|b| **b != 0.0).count() >= 2);
        for (u, v) in relaxed.beta.iter().zip(&plain.beta) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn empty_active_set_flagged() {
        let (a, y) = orthonormal();
        let fit = fit_relaxed_lasso(&a, &y, 1e6, 0.5).unwrap();
        assert!(fit.beta.iter().all(|b| *b == 0.0));
        assert!(fit.is_flagged(FitFlag::EmptyActiveSet));
    }
}
