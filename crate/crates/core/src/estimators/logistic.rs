//! Logistic link: an L2-penalized logistic fit (the default center) and the
//! logistic SACR problem solved by outer IRLS around the QP solver.

use super::sacr::{check_phi, penalty_quad, sacr_hyperparams, weight_constraints};
use super::{
    check_design, check_lambda, check_vector, Estimator, FitError, FitFlag, Hyperparams, LinearFit,
    SacrFit,
};
use crate::linalg::{Cholesky, DenseMatrix};
use crate::qp::{check_kkt, solve_qp, QpProblem, DEFAULT_MAX_ITER, DEFAULT_TOL};

const IRLS_MAX_ITER: usize = 50;
const IRLS_REL_TOL: f64 = 1e-8;
const NEWTON_MAX_ITER: usize = 100;
const WEIGHT_FLOOR: f64 = 1e-10;

/// `log(1 + exp(x))` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy written as `Σ softplus(ηᵢ) - yᵢηᵢ`, which equals
/// `Σ log(1 + exp(-(2yᵢ-1)ηᵢ))` for `yᵢ ∈ {0, 1}`.
fn log_loss(eta: &[f64], labels: &[f64]) -> f64 {
    eta.iter().zip(labels).map(|(e, y)| softplus(*e) - y * e).sum()
}

fn check_labels(labels: &[f64]) -> Result<(), FitError> {
    if labels.iter().any(|y| *y != 0.0 && *y != 1.0) {
        return Err(FitError::Invalid("labels must be 0 or 1".into()));
    }
    let ones = labels.iter().filter(|y| **y == 1.0).count();
    if ones == 0 || ones == labels.len() {
        return Err(FitError::BothClassesRequired);
    }
    Ok(())
}

fn prior_logit(labels: &[f64]) -> f64 {
    let p = crate::linalg::mean(labels);
    (p / (1.0 - p)).ln()
}

/// `[1 A]`.
fn with_intercept(a: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(a.rows(), a.cols() + 1, |i, j| if j == 0 { 1.0 } else { a[(i, j - 1)] })
}

/// Minimizes `Σ logloss + λ‖β‖²` (intercept unpenalized) by damped Newton.
pub fn fit_logistic_ridge(a: &DenseMatrix, labels: &[f64], lambda: f64) -> Result<LinearFit, FitError> {
    check_design(a, labels)?;
    check_lambda(lambda, false)?;
    check_labels(labels)?;
    let x = with_intercept(a);
    let k = x.cols();
    let objective = |theta: &[f64]| {
        let pen: f64 = theta[1..].iter().map(|b| b * b).sum();
        log_loss(&x.matvec(theta), labels) + lambda * pen
    };
    let mut theta = vec![0.0; k];
    theta[0] = prior_logit(labels);
    let mut f = objective(&theta);
    let mut converged = false;
    for _ in 0..NEWTON_MAX_ITER {
        let eta = x.matvec(&theta);
        let mu: Vec<f64> = eta.iter().map(|e| sigmoid(*e)).collect();
        let resid: Vec<f64> = mu.iter().zip(labels).map(|(m, y)| m - y).collect();
        let mut grad = x.tr_matvec(&resid);
        for j in 1..k {
            grad[j] += 2.0 * lambda * theta[j];
        }
        let wts: Vec<f64> = mu.iter().map(|m| (m * (1.0 - m)).max(WEIGHT_FLOOR)).collect();
        let mut hess = x.weighted_gram(&wts);
        for j in 1..k {
            hess[(j, j)] += 2.0 * lambda;
        }
        let step = Cholesky::factor(&hess)?.solve_vec(&grad);
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-10 {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(th, s)| th - t * s).collect();
            let fc = objective(&cand);
            if fc <= f {
                accepted = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, fc)) = accepted else {
            converged = true;
            break;
        };
        let decrease = f - fc;
        theta = cand;
        f = fc;
        if decrease <= 1e-12 * f.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    Ok(LinearFit {
        estimator: Estimator::LogisticRidge,
        hyperparams: Hyperparams::lambda(lambda),
        intercept: theta[0],
        beta: theta[1..].to_vec(),
        flags: if converged { vec![] } else { vec![FitFlag::NonConvergence] },
    })
}

/// Penalized logistic SACR objective over `z = (β₀, β, w)`.
#[derive(Debug, Clone)]
pub struct LogisticSacrObjective {
    x: DenseMatrix,
    labels: Vec<f64>,
    penalty: DenseMatrix,
}

impl LogisticSacrObjective {
    pub fn new(
        a: &DenseMatrix,
        labels: &[f64],
        lambda: f64,
        phi: f64,
        center: &[f64],
    ) -> Result<Self, FitError> {
        check_design(a, labels)?;
        check_lambda(lambda, false)?;
        check_phi(phi)?;
        check_vector("center", center, a.cols())?;
        if a.cols() < 3 {
            return Err(FitError::Invalid(format!("SACR needs at least 3 grid points, got {}", a.cols())));
        }
        check_labels(labels)?;
        Ok(Self {
            x: with_intercept(a),
            labels: labels.to_vec(),
            penalty: penalty_quad(a.cols(), lambda, phi, center)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.penalty.rows()
    }

    fn eta(&self, z: &[f64]) -> Vec<f64> {
        self.x.matvec(&z[..self.x.cols()])
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        let pz = self.penalty.matvec(z);
        log_loss(&self.eta(z), &self.labels) + 0.5 * crate::linalg::dot(z, &pz)
    }

    pub fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let resid: Vec<f64> = self
            .eta(z)
            .iter()
            .zip(&self.labels)
            .map(|(e, y)| sigmoid(*e) - y)
            .collect();
        let mut g = self.penalty.matvec(z);
        for (gi, v) in g.iter_mut().zip(self.x.tr_matvec(&resid)) {
            *gi += v;
        }
        g
    }

    /// Quadratic model of the objective around `z` as a QP over the SACR
    /// constraint set.
    fn irls_qp(&self, z: &[f64]) -> Result<QpProblem, crate::qp::QpError> {
        let eta = self.eta(z);
        let wts: Vec<f64> = eta
            .iter()
            .map(|e| {
                let m = sigmoid(*e);
                (m * (1.0 - m)).max(WEIGHT_FLOOR)
            })
            .collect();
        let h = self.x.weighted_gram(&wts);
        let mut quad = self.penalty.clone();
        let k = self.x.cols();
        for i in 0..k {
            for j in 0..k {
                quad[(i, j)] += h[(i, j)];
            }
        }
        // q = ∇loss(z) - H z, so that the model gradient at z is exact
        let mut linear = self.gradient(z);
        let pz = self.penalty.matvec(z);
        let hz = h.matvec(&z[..k]);
        for i in 0..linear.len() {
            linear[i] -= pz[i];
            if i < k {
                linear[i] -= hz[i];
            }
        }
        let p = self.x.cols() - 1;
        let (a_eq, b_eq, lower) = weight_constraints(p);
        QpProblem::new(quad, linear, a_eq, b_eq, lower)
    }
}

/// Logistic SACR. Without an explicit `center`, `fit_logistic_ridge` at the
/// same `λ` supplies it, scaled by `Δt` like the penalty integrals.
pub fn fit_sacr_logistic(
    a: &DenseMatrix,
    labels: &[f64],
    lambda: f64,
    phi: f64,
    center: Option<&[f64]>,
) -> Result<SacrFit, FitError> {
    check_design(a, labels)?;
    check_lambda(lambda, false)?;
    check_phi(phi)?;
    check_labels(labels)?;
    let center = match center {
        Some(c) => c.to_vec(),
        None => fit_logistic_ridge(a, labels, lambda / a.cols() as f64)?.beta,
    };
    let obj = LogisticSacrObjective::new(a, labels, lambda, phi, &center)?;
    let hyperparams = sacr_hyperparams(lambda, phi);
    let solver = |source| FitError::Solver { hyperparams, source };
    let p = a.cols();
    let mut z = vec![0.0; 1 + 2 * p];
    z[0] = prior_logit(labels);
    z[1 + p..].iter_mut().for_each(|w| *w = 1.0);
    let mut f = obj.value(&z);
    let mut kkt = None;
    let mut converged = false;
    for _ in 0..IRLS_MAX_ITER {
        let qp = obj.irls_qp(&z).map_err(solver)?;
        let sol = solve_qp(&qp, DEFAULT_TOL, DEFAULT_MAX_ITER).map_err(solver)?;
        kkt = Some(check_kkt(&qp, &sol).map_err(solver)?);
        // backtrack along the segment toward the model minimizer, which
        // stays feasible by convexity of the constraint set
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-10 {
            let cand: Vec<f64> = z.iter().zip(&sol.z).map(|(a, b)| a + t * (b - a)).collect();
            let fc = obj.value(&cand);
            if fc <= f {
                accepted = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, fc)) = accepted else {
            converged = true;
            break;
        };
        let decrease = f - fc;
        z = cand;
        f = fc;
        if decrease < IRLS_REL_TOL * f.abs().max(1e-300) {
            converged = true;
            break;
        }
    }
    let kkt = kkt.expect("at least one IRLS step runs");
    Ok(SacrFit {
        linear: LinearFit {
            estimator: Estimator::SacrLogistic,
            hyperparams,
            intercept: z[0],
            beta: z[1..=p].to_vec(),
            flags: if converged { vec![] } else { vec![FitFlag::NonConvergence] },
        },
        w: z[1 + p..].to_vec(),
        center,
        lambda,
        phi,
        kkt,
    })
}
