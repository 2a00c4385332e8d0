use super::{check_lambda, check_vector, Centered, Estimator, FitError, Hyperparams, LinearFit};
use crate::linalg::DenseMatrix;
use crate::qp::{solve_qp, QpProblem, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Nonnegative garrote: `min ‖y - Ãc‖² + λΣcⱼ` over `c ≥ 0` with
/// `Ã = A·diag(initial)`, returning `βⱼ = cⱼ·initialⱼ`.
pub fn fit_nng(a: &DenseMatrix, y: &[f64], lambda: f64, initial: &[f64]) -> Result<LinearFit, FitError> {
    check_lambda(lambda, true)?;
    check_vector("initial", initial, a.cols())?;
    let c = Centered::new(a, y)?;
    let at = c.a.scale_columns(initial);
    let quad = at.gram().scale(2.0);
    let linear: Vec<f64> = at.tr_matvec(&c.y).iter().map(|v| lambda - 2.0 * v).collect();
    let hyperparams = Hyperparams::lambda(lambda);
    let solver = |source| FitError::Solver { hyperparams, source };
    let problem = QpProblem::bounded(quad, linear, vec![0.0; a.cols()]).map_err(solver)?;
    let sol = solve_qp(&problem, DEFAULT_TOL, DEFAULT_MAX_ITER).map_err(solver)?;
    let beta: Vec<f64> = sol.z.iter().zip(initial).map(|(cj, b)| cj * b).collect();
    Ok(LinearFit {
        estimator: Estimator::Nng,
        hyperparams,
        intercept: c.intercept(&beta),
        beta,
        flags: vec![],
    })
}
