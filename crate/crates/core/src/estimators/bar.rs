use super::{check_lambda, check_vector, Centered, Estimator, FitError, FitFlag, Hyperparams, LinearFit};
use crate::linalg::{Cholesky, DenseMatrix};

const BAR_MAX_ITER: usize = 100;
const BAR_TOL: f64 = 1e-8;
const FREEZE_BELOW: f64 = 1e-8;
/// `|β|` floor inside the reweighting, i.e. `max(β², 1e-12)`.
const WEIGHT_FLOOR: f64 = 1e-6;

/// Broken adaptive ridge: `β ← (AᵀA + λ·diag(1/β²))⁻¹Aᵀy` iterated from
/// `initial`. Each step is solved in the reparametrized form
/// `β = D(DAᵀAD + λI)⁻¹DAᵀy`, `D = diag(β)`, which stays well conditioned
/// as coordinates collapse. Coordinates that fall below `1e-8` are frozen
/// at zero.
pub fn fit_bar(a: &DenseMatrix, y: &[f64], lambda: f64, initial: &[f64]) -> Result<LinearFit, FitError> {
    check_lambda(lambda, false)?;
    check_vector("initial", initial, a.cols())?;
    let c = Centered::new(a, y)?;
    let gram = c.a.gram();
    let aty = c.a.tr_matvec(&c.y);
    let p = a.cols();
    let mut beta: Vec<f64> = initial
        .iter()
        .map(|b| if b.abs() < FREEZE_BELOW { 0.0 } else { *b })
        .collect();
    let mut converged = false;
    for _ in 0..BAR_MAX_ITER {
        let active: Vec<usize> = (0..p).filter(|&j| beta[j] != 0.0).collect();
        let mut next = vec![0.0; p];
        if !active.is_empty() {
            let d: Vec<f64> = active
                .iter()
                .map(|&j| beta[j].signum() * beta[j].abs().max(WEIGHT_FLOOR))
                .collect();
            let k = active.len();
            let mut m = DenseMatrix::from_fn(k, k, |r, s| d[r] * gram[(active[r], active[s])] * d[s]);
            m.add_diagonal(lambda);
            let rhs: Vec<f64> = (0..k).map(|r| d[r] * aty[active[r]]).collect();
            let g = Cholesky::factor(&m)?.solve_vec(&rhs);
            for r in 0..k {
                let v = d[r] * g[r];
                next[active[r]] = if v.abs() < FREEZE_BELOW { 0.0 } else { v };
            }
        }
        let change = next
            .iter()
            .zip(&beta)
            .fold(0.0_f64, |m, (u, v)| m.max((u - v).abs()));
        beta = next;
        if change < BAR_TOL {
            converged = true;
            break;
        }
    }
    Ok(LinearFit {
        estimator: Estimator::Bar,
        hyperparams: Hyperparams::lambda(lambda),
        intercept: c.intercept(&beta),
        beta,
        flags: if converged { vec![] } else { vec![FitFlag::NonConvergence] },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Orthonormal, mean-zero columns so that `βⱼ_ols = A_jᵀy`.
    fn orthonormal() -> DenseMatrix {
        DenseMatrix::from_rows(&[
            vec![0.5, 0.5],
            vec![0.5, -0.5],
            vec![-0.5, 0.5],
            vec![-0.5, -0.5],
        ])
        .unwrap()
    }

    #[test]
    fn scalar_fixed_points() {
        let a = orthonormal();
        let y = [2.0, 1.0, -1.0, -1.4];
        let ols = a.tr_matvec(&y);
        let lambda: f64 = 0.3;
        // one coordinate above 2√λ ≈ 1.095, one below
        assert!(ols[0].abs() > 2.0 * lambda.sqrt() && ols[1].abs() < 2.0 * lambda.sqrt());
        let fit = fit_bar(&a, &y, lambda, &ols).unwrap();
        let b = ols[0];
        let root = (b + b.signum() * (b * b - 4.0 * lambda).sqrt()) / 2.0;
        assert!((fit.beta[0] - root).abs() < 1e-6, "{} vs {root}", fit.beta[0]);
        assert_eq!(fit.beta[1], 0.0);
        assert!(fit.flags.is_empty());
    }

    #[test]
    fn vanishing_lambda_is_ols() {
        let (a, noise) = super::super::random_problem(20, 3, 5);
        let y: Vec<f64> = (0..20)
            .map(|i| a.row(i)[0] - 2.0 * a.row(i)[1] + 0.5 * a.row(i)[2] + 0.1 * noise[i])
            .collect();
        let c = Centered::new(&a, &y).unwrap();
        let ols = crate::linalg::lstsq_qr(&c.a, &c.y).unwrap();
        let fit = fit_bar(&a, &y, 1e-12, &ols).unwrap();
        for (u, v) in fit.beta.iter().zip(&ols) {
            assert!((u - v).abs() < 1e-6);
        }
    }
}
