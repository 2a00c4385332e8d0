//! Smoothly adaptively centered ridge.
//!
//! Jointly estimates `(β₀, β, w)` by minimizing
//!
//! ```text
//! ‖y - β₀1 - Aβ‖² + λφΔt‖β - diag(β̃)w‖² + λ(1-φ)Δt‖L diag(β̃) w‖² + τ‖w‖²
//! ```
//!
//! subject to `Δt·Σw = 1` and `w ≥ 0`, where `β̃` is the initial center
//! (by default the ridge solution at the same `λ`), `L` the second-difference
//! operator and `τ` a tiny Tikhonov shift that pins `w` down where the
//! center vanishes.

use super::{
    check_lambda, check_vector, fit_ridge, Estimator, FitError, Hyperparams, LinearFit, SacrFit,
};
use crate::linalg::{second_difference_operator, DenseMatrix};
use crate::qp::{check_kkt, solve_qp, QpProblem, DEFAULT_MAX_ITER, DEFAULT_TOL};

pub const W_TIKHONOV: f64 = 1e-10;

pub(crate) fn check_phi(phi: f64) -> Result<(), FitError> {
    if phi > 0.0 && phi <= 1.0 {
        Ok(())
    } else {
        Err(FitError::Invalid(format!("phi must lie in (0, 1], got {phi}")))
    }
}

/// Penalty part of the SACR objective as `½zᵀQz` over `z = (β₀, β, w)`.
pub(crate) fn penalty_quad(p: usize, lambda: f64, phi: f64, center: &[f64]) -> Result<DenseMatrix, FitError> {
    let n = 1 + 2 * p;
    let dt = 1.0 / p as f64;
    let k_center = lambda * phi * dt;
    let k_rough = lambda * (1.0 - phi) * dt;
    let mut q = DenseMatrix::zeros(n, n);
    let (b, w) = (1, 1 + p);
    for j in 0..p {
        q[(b + j, b + j)] += 2.0 * k_center;
        q[(b + j, w + j)] -= 2.0 * k_center * center[j];
        q[(w + j, b + j)] -= 2.0 * k_center * center[j];
        q[(w + j, w + j)] += 2.0 * (k_center * center[j] * center[j] + W_TIKHONOV);
    }
    if k_rough > 0.0 {
        let ltl = second_difference_operator(p)?.gram();
        // diag(c)·LᵀL·diag(c), pentadiagonal
        for i in 0..p {
            for j in i.saturating_sub(2)..(i + 3).min(p) {
                q[(w + i, w + j)] += 2.0 * k_rough * center[i] * ltl[(i, j)] * center[j];
            }
        }
    }
    Ok(q)
}

/// Unit-mean constraint row and bounds shared by the regression and
/// logistic variants.
pub(crate) fn weight_constraints(p: usize) -> (DenseMatrix, Vec<f64>, Vec<f64>) {
    let n = 1 + 2 * p;
    let dt = 1.0 / p as f64;
    let mut a_eq = DenseMatrix::zeros(1, n);
    for j in 0..p {
        a_eq[(0, 1 + p + j)] = dt;
    }
    let mut lower = vec![f64::NEG_INFINITY; n];
    lower[1 + p..].iter_mut().for_each(|l| *l = 0.0);
    (a_eq, vec![1.0], lower)
}

/// Builds the SACR QP over `z = (β₀, β, w) ∈ R^{1+2p}`.
pub fn assemble_sacr_qp(
    a: &DenseMatrix,
    y: &[f64],
    lambda: f64,
    phi: f64,
    center: &[f64],
) -> Result<QpProblem, FitError> {
    super::check_design(a, y)?;
    check_lambda(lambda, false)?;
    check_phi(phi)?;
    let p = a.cols();
    check_vector("center", center, p)?;
    if p < 3 {
        return Err(FitError::Invalid(format!("SACR needs at least 3 grid points, got {p}")));
    }
    let n = 1 + 2 * p;
    let mut quad = penalty_quad(p, lambda, phi, center)?;

    // ‖y - [1 A]·(β₀, β)‖²
    let mut design = DenseMatrix::zeros(a.rows(), 1 + p);
    for i in 0..a.rows() {
        let row = design.row_mut(i);
        row[0] = 1.0;
        row[1..].copy_from_slice(a.row(i));
    }
    let gram = design.gram();
    for i in 0..=p {
        for j in 0..=p {
            quad[(i, j)] += 2.0 * gram[(i, j)];
        }
    }
    let mut linear = vec![0.0; n];
    for (l, v) in linear.iter_mut().zip(design.tr_matvec(y)) {
        *l = -2.0 * v;
    }
    let (a_eq, b_eq, lower) = weight_constraints(p);
    QpProblem::new(quad, linear, a_eq, b_eq, lower).map_err(|source| FitError::Solver {
        hyperparams: sacr_hyperparams(lambda, phi),
        source,
    })
}

pub(crate) fn sacr_hyperparams(lambda: f64, phi: f64) -> Hyperparams {
    Hyperparams {
        lambda,
        phi: Some(phi),
        ..Hyperparams::default()
    }
}

/// Fits SACR. Without an explicit `center`, the ridge solution at the same
/// `λ` is used, with its penalty on the same quadrature scale (`λΔt‖β‖²`,
/// i.e. `λ∫β²`) as the SACR penalty integrals.
pub fn fit_sacr(
    a: &DenseMatrix,
    y: &[f64],
    lambda: f64,
    phi: f64,
    center: Option<&[f64]>,
) -> Result<SacrFit, FitError> {
    check_lambda(lambda, false)?;
    check_phi(phi)?;
    let center = match center {
        Some(c) => c.to_vec(),
        None => fit_ridge(a, y, lambda / a.cols() as f64)?.beta,
    };
    let problem = assemble_sacr_qp(a, y, lambda, phi, &center)?;
    let hyperparams = sacr_hyperparams(lambda, phi);
    let sol = solve_qp(&problem, DEFAULT_TOL, DEFAULT_MAX_ITER)
        .map_err(|source| FitError::Solver { hyperparams, source })?;
    let kkt = check_kkt(&problem, &sol).map_err(|source| FitError::Solver { hyperparams, source })?;
    let p = a.cols();
    Ok(SacrFit {
        linear: LinearFit {
            estimator: Estimator::Sacr,
            hyperparams,
            intercept: sol.z[0],
            beta: sol.z[1..=p].to_vec(),
            flags: vec![],
        },
        w: sol.z[1 + p..].to_vec(),
        center,
        lambda,
        phi,
        kkt,
    })
}
