use super::{check_lambda, check_vector, Centered, Estimator, FitError, Hyperparams, LinearFit};
use crate::linalg::{lstsq_qr, second_difference_operator, Cholesky, DenseMatrix};

/// Shift added to `λLᵀL` so the affine nullspace stays identifiable.
pub const ROUGHNESS_NULLSPACE_GUARD: f64 = 1e-10;

fn solve_penalized(gram: DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>, FitError> {
    Ok(Cholesky::factor(&gram)?.solve_vec(rhs))
}

/// `β = (AᵀA + λI)⁻¹Aᵀy` on centered data.
pub fn fit_ridge(a: &DenseMatrix, y: &[f64], lambda: f64) -> Result<LinearFit, FitError> {
    check_lambda(lambda, false)?;
    let c = Centered::new(a, y)?;
    let mut gram = c.a.gram();
    gram.add_diagonal(lambda);
    let beta = solve_penalized(gram, &c.a.tr_matvec(&c.y))?;
    Ok(LinearFit {
        estimator: Estimator::Ridge,
        hyperparams: Hyperparams::lambda(lambda),
        intercept: c.intercept(&beta),
        beta,
        flags: vec![],
    })
}

/// Ridge shrinking toward `center`: `β = (AᵀA + λI)⁻¹(Aᵀy + λc)`.
pub fn fit_centered_ridge(
    a: &DenseMatrix,
    y: &[f64],
    lambda: f64,
    center: &[f64],
) -> Result<LinearFit, FitError> {
    check_lambda(lambda, false)?;
    check_vector("center", center, a.cols())?;
    let c = Centered::new(a, y)?;
    let mut gram = c.a.gram();
    gram.add_diagonal(lambda);
    let mut rhs = c.a.tr_matvec(&c.y);
    for (r, cj) in rhs.iter_mut().zip(center) {
        *r += lambda * cj;
    }
    let beta = solve_penalized(gram, &rhs)?;
    Ok(LinearFit {
        estimator: Estimator::CenteredRidge,
        hyperparams: Hyperparams::lambda(lambda),
        intercept: c.intercept(&beta),
        beta,
        flags: vec![],
    })
}

/// Second-difference roughness penalty:
/// `β = (AᵀA + λLᵀL + εI)⁻¹Aᵀy`.
///
/// Falls back to a QR solve of the stacked system `[√λ L; A; √ε I]` when
/// `λ` is large enough to break the Cholesky factorization.
pub fn fit_roughness(a: &DenseMatrix, y: &[f64], lambda: f64) -> Result<LinearFit, FitError> {
    check_lambda(lambda, false)?;
    let op = second_difference_operator(a.cols())?;
    let c = Centered::new(a, y)?;
    let mut gram = c.a.gram();
    gram.add_scaled(lambda, &op.gram());
    gram.add_diagonal(ROUGHNESS_NULLSPACE_GUARD);
    let rhs = c.a.tr_matvec(&c.y);
    let beta = match Cholesky::factor(&gram) {
        Ok(ch) => ch.solve_vec(&rhs),
        Err(_) => {
            let p = a.cols();
            let (n, r) = (c.a.rows(), op.rows());
            let mut stacked = DenseMatrix::zeros(r + n + p, p);
            let sl = lambda.sqrt();
            let l = op.to_dense();
            for i in 0..r {
                for j in 0..p {
                    stacked[(i, j)] = sl * l[(i, j)];
                }
            }
            for i in 0..n {
                stacked.row_mut(r + i).copy_from_slice(c.a.row(i));
            }
            for j in 0..p {
                stacked[(r + n + j, j)] = ROUGHNESS_NULLSPACE_GUARD.sqrt();
            }
            let mut b = vec![0.0; r + n + p];
            b[r..r + n].copy_from_slice(&c.y);
            lstsq_qr(&stacked, &b)?
        }
    };
    Ok(LinearFit {
        estimator: Estimator::Roughness,
        hyperparams: Hyperparams::lambda(lambda),
        intercept: c.intercept(&beta),
        beta,
        flags: vec![],
    })
}
