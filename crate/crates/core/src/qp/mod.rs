//! Dense convex quadratic programming.
//!
//! Problems have the form
//!
//! ```text
//! minimize    ½ zᵀQz + qᵀz
//! subject to  Aeq·z = beq
//!             z ≥ lower        (entries of `lower` may be -∞)
//! ```
//!
//! and are solved with a Mehrotra predictor-corrector primal-dual interior
//! point method. The bound multipliers are eliminated from the Newton system
//! and the remaining symmetric system is solved through a Cholesky factor of
//! `Q + X⁻¹S` and the Schur complement of the equality block.

mod io;

pub use io::{read_problem, write_problem};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, norm_inf, Cholesky, DenseMatrix, LinalgError};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 200;

const STEP_TO_BOUNDARY: f64 = 0.995;
const INFEASIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone)]
pub enum QpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("quadratic term is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("quadratic term is not positive semidefinite")]
    NotPsd,
    #[error("equality constraints are rank deficient")]
    RankDeficient,
    #[error("invalid problem data: {0}")]
    InvalidData(String),
    #[error("bound multiplier {index} is negative ({value:e})")]
    NegativeMultiplier { index: usize, value: f64 },
    #[error("problem is infeasible (primal residual {primal:e})")]
    Infeasible { primal: f64 },
    #[error("maximum iterations exceeded ({}); best residuals {:?}", .0.iterations, .0.kkt)]
    MaxIterationsExceeded(Box<QpSolution>),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A validated dense convex QP.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    quad: DenseMatrix,
    linear: Vec<f64>,
    a_eq: DenseMatrix,
    b_eq: Vec<f64>,
    lower: Vec<f64>,
}

impl QpProblem {
    pub fn new(
        quad: DenseMatrix,
        linear: Vec<f64>,
        a_eq: DenseMatrix,
        b_eq: Vec<f64>,
        lower: Vec<f64>,
    ) -> Result<Self, QpError> {
        let n = linear.len();
        if quad.rows() != n || quad.cols() != n {
            return Err(QpError::DimensionMismatch(format!(
                "Q is {}x{}, q has length {n}",
                quad.rows(),
                quad.cols()
            )));
        }
        if a_eq.cols() != n && a_eq.rows() > 0 {
            return Err(QpError::DimensionMismatch(format!(
                "Aeq has {} columns, expected {n}",
                a_eq.cols()
            )));
        }
        if a_eq.rows() != b_eq.len() {
            return Err(QpError::DimensionMismatch(format!(
                "Aeq has {} rows, beq has length {}",
                a_eq.rows(),
                b_eq.len()
            )));
        }
        if lower.len() != n {
            return Err(QpError::DimensionMismatch(format!(
                "lower has length {}, expected {n}",
                lower.len()
            )));
        }
        if !quad.all_finite() || !a_eq.all_finite() {
            return Err(QpError::InvalidData("non-finite matrix entry".into()));
        }
        if linear.iter().chain(&b_eq).any(|v| !v.is_finite()) {
            return Err(QpError::InvalidData("non-finite vector entry".into()));
        }
        if lower.iter().any(|l| l.is_nan() || *l == f64::INFINITY) {
            return Err(QpError::InvalidData("lower bounds must be finite or -inf".into()));
        }
        let asym = quad.asymmetry();
        if asym > 1e-10 {
            return Err(QpError::NotSymmetric(asym));
        }
        // PSD up to a smallest eigenvalue of -1e-8 (relative to the diagonal scale)
        let mut shifted = quad.clone();
        let max_diag = quad.diagonal().iter().fold(0.0_f64, |m, d| m.max(d.abs()));
        shifted.add_diagonal(1e-8 * max_diag.max(1.0));
        if n > 0 && Cholesky::factor(&shifted).is_err() {
            return Err(QpError::NotPsd);
        }
        let a_eq = if a_eq.rows() == 0 {
            DenseMatrix::zeros(0, n)
        } else {
            a_eq
        };
        if a_eq.rows() > 0 && Cholesky::factor(&a_eq.transpose().gram()).is_err() {
            return Err(QpError::RankDeficient);
        }
        Ok(Self {
            quad,
            linear,
            a_eq,
            b_eq,
            lower,
        })
    }

    /// Problem without equality constraints.
    pub fn bounded(quad: DenseMatrix, linear: Vec<f64>, lower: Vec<f64>) -> Result<Self, QpError> {
        let n = linear.len();
        Self::new(quad, linear, DenseMatrix::zeros(0, n), Vec::new(), lower)
    }

    pub fn n(&self) -> usize {
        self.linear.len()
    }

    pub fn m(&self) -> usize {
        self.b_eq.len()
    }

    pub fn quad(&self) -> &DenseMatrix {
        &self.quad
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn a_eq(&self) -> &DenseMatrix {
        &self.a_eq
    }

    pub fn b_eq(&self) -> &[f64] {
        &self.b_eq
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn is_bounded(&self, i: usize) -> bool {
        self.lower[i].is_finite()
    }

    pub fn bounded_count(&self) -> usize {
        self.lower.iter().filter(|l| l.is_finite()).count()
    }

    pub fn objective(&self, z: &[f64]) -> f64 {
        0.5 * dot(z, &self.quad.matvec(z)) + dot(&self.linear, z)
    }

    /// `Q·z + q`.
    pub fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let mut g = self.quad.matvec(z);
        for (gi, qi) in g.iter_mut().zip(&self.linear) {
            *gi += qi;
        }
        g
    }

    /// Same problem with `(Q, q)` multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            quad: self.quad.scale(alpha),
            linear: self.linear.iter().map(|v| alpha * v).collect(),
            ..self.clone()
        }
    }
}

/// Max-norm KKT residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub stationarity: f64,
    pub primal: f64,
    pub complementarity: f64,
}

impl KktReport {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.primal).max(self.complementarity)
    }

    pub fn within(&self, tol: f64) -> bool {
        let all = [self.stationarity, self.primal, self.complementarity];
        all.iter().all(|r| r.is_finite() && *r <= tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpSolution {
    pub z: Vec<f64>,
    /// Equality multipliers.
    pub y: Vec<f64>,
    /// Bound multipliers, zero on unbounded coordinates.
    pub s: Vec<f64>,
    pub iterations: usize,
    pub kkt: KktReport,
    /// Level the stationarity and feasibility residuals are certified to:
    /// the requested tolerance, or the rounding floor of the problem when
    /// that is larger.
    #[serde(default)]
    pub tolerance: f64,
    /// Complementarity gap `Σ sᵢ(zᵢ - lᵢ)` after every iteration.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gap_trace: Vec<f64>,
}

/// Recomputes KKT residuals of `solution` from scratch.
pub fn check_kkt(problem: &QpProblem, solution: &QpSolution) -> Result<KktReport, QpError> {
    let n = problem.n();
    if solution.z.len() != n || solution.s.len() != n || solution.y.len() != problem.m() {
        return Err(QpError::DimensionMismatch(format!(
            "solution sizes (z {}, y {}, s {}) do not match problem (n {n}, m {})",
            solution.z.len(),
            solution.y.len(),
            solution.s.len(),
            problem.m()
        )));
    }
    if let Some((index, &value)) = solution.s.iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(QpError::NegativeMultiplier { index, value });
    }
    Ok(residuals(problem, &solution.z, &solution.y, &solution.s))
}

fn residuals(problem: &QpProblem, z: &[f64], y: &[f64], s: &[f64]) -> KktReport {
    let mut stat = problem.gradient(z);
    let aty = problem.a_eq.tr_matvec(y);
    for i in 0..stat.len() {
        stat[i] -= aty[i] + s[i];
    }
    let eq = problem.a_eq.matvec(z);
    let mut primal = eq
        .iter()
        .zip(&problem.b_eq)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    let mut comp: f64 = 0.0;
    for i in 0..z.len() {
        let l = problem.lower[i];
        if l.is_finite() {
            primal = primal.max(l - z[i]);
            comp = comp.max((s[i] * (z[i] - l)).abs());
        }
    }
    KktReport {
        stationarity: norm_inf(&stat),
        primal,
        complementarity: comp,
    }
}

/// Rounding floor for the stationarity and equality residuals at an
/// iterate: a few ulps of the largest magnitude summed into each entry.
/// Badly scaled problems (entries of `Q` near 1e7 and beyond) cannot reach
/// an absolute 1e-8 in double precision, so termination accepts this floor.
fn roundoff_floor(problem: &QpProblem, z: &[f64], y: &[f64], s: &[f64]) -> (f64, f64) {
    const ULPS: f64 = 16.0 * f64::EPSILON;
    let n = z.len();
    let mut stat: f64 = 0.0;
    for i in 0..n {
        let row = problem.quad.row(i);
        let mut mag: f64 = row.iter().zip(z).map(|(q, v)| (q * v).abs()).sum();
        mag += problem.linear[i].abs() + s[i].abs();
        for (k, yk) in y.iter().enumerate() {
            mag += (problem.a_eq[(k, i)] * yk).abs();
        }
        stat = stat.max(mag);
    }
    let mut prim: f64 = 0.0;
    for k in 0..problem.m() {
        let mag: f64 = problem.a_eq.row(k).iter().zip(z).map(|(a, v)| (a * v).abs()).sum();
        prim = prim.max(mag + problem.b_eq[k].abs());
    }
    (ULPS * stat, ULPS * prim)
}

/// Factorized Newton system for one interior-point iteration.
struct NewtonSystem<'a> {
    problem: &'a QpProblem,
    /// `Q + diag(d)` without regularization, for refinement.
    d: Vec<f64>,
    chol: Cholesky,
    /// `K⁻¹Aᵀ`, n×m.
    k_inv_at: DenseMatrix,
    schur: Option<Cholesky>,
}

impl<'a> NewtonSystem<'a> {
    fn new(problem: &'a QpProblem, d: Vec<f64>) -> Result<Self, QpError> {
        let n = problem.n();
        let mut k = problem.quad.clone();
        for i in 0..n {
            k[(i, i)] += d[i];
        }
        let max_diag = k.diagonal().iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let chol = match Cholesky::factor(&k) {
            Ok(c) => c,
            Err(_) => {
                let mut reg = 1e-12;
                loop {
                    let mut shifted = k.clone();
                    shifted.add_diagonal(reg * max_diag);
                    match Cholesky::factor(&shifted) {
                        Ok(c) => break c,
                        Err(e) if reg >= 1e-6 => return Err(e.into()),
                        Err(_) => reg *= 100.0,
                    }
                }
            }
        };
        let m = problem.m();
        let mut k_inv_at = DenseMatrix::zeros(n, m);
        for r in 0..m {
            let col = chol.solve_vec(problem.a_eq.row(r));
            for i in 0..n {
                k_inv_at[(i, r)] = col[i];
            }
        }
        let schur = if m > 0 {
            let schur_m = problem.a_eq.matmul(&k_inv_at);
            Some(Cholesky::factor(&symmetrize(schur_m)).or_else(|_| {
                let mut s = symmetrize(problem.a_eq.matmul(&k_inv_at));
                let md = s.diagonal().iter().fold(1.0_f64, |a, v| a.max(v.abs()));
                s.add_diagonal(1e-12 * md);
                Cholesky::factor(&s)
            })?)
        } else {
            None
        };
        Ok(Self {
            problem,
            d,
            chol,
            k_inv_at,
            schur,
        })
    }

    /// Solves `[K  -Aᵀ; A  0]·(dz, dy) = (r1, r2)`.
    fn solve_once(&self, r1: &[f64], r2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let u = self.chol.solve_vec(r1);
        match &self.schur {
            None => (u, Vec::new()),
            Some(schur) => {
                let au = self.problem.a_eq.matvec(&u);
                let rhs: Vec<f64> = r2.iter().zip(&au).map(|(r, a)| r - a).collect();
                let dy = schur.solve_vec(&rhs);
                let mut dz = u;
                let v = self.k_inv_at.matvec(&dy);
                for (a, b) in dz.iter_mut().zip(&v) {
                    *a += b;
                }
                (dz, dy)
            }
        }
    }

    fn apply(&self, dz: &[f64], dy: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut r1 = self.problem.quad.matvec(dz);
        let aty = self.problem.a_eq.tr_matvec(dy);
        for i in 0..r1.len() {
            r1[i] += self.d[i] * dz[i] - aty[i];
        }
        (r1, self.problem.a_eq.matvec(dz))
    }

    /// Solve with one step of iterative refinement.
    fn solve(&self, r1: &[f64], r2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (mut dz, mut dy) = self.solve_once(r1, r2);
        let (a1, a2) = self.apply(&dz, &dy);
        let e1: Vec<f64> = r1.iter().zip(&a1).map(|(r, a)| r - a).collect();
        let e2: Vec<f64> = r2.iter().zip(&a2).map(|(r, a)| r - a).collect();
        let (cz, cy) = self.solve_once(&e1, &e2);
        dz.iter_mut().zip(&cz).for_each(|(a, b)| *a += b);
        dy.iter_mut().zip(&cy).for_each(|(a, b)| *a += b);
        (dz, dy)
    }
}

fn symmetrize(mut m: DenseMatrix) -> DenseMatrix {
    for i in 0..m.rows() {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Largest `α ∈ (0, 1]` keeping `v + α·dv > 0` on the bounded index set.
fn max_step(v: &[f64], dv: &[f64], bounded: &[usize]) -> f64 {
    bounded.iter().fold(1.0_f64, |alpha, &i| {
        if dv[i] < 0.0 {
            alpha.min(-v[i] / dv[i])
        } else {
            alpha
        }
    })
}

/// Solves a convex QP to KKT tolerance `tol`.
///
/// Stationarity and primal feasibility are accepted at `tol` or at the
/// rounding floor of the iterate, whichever is larger; the level reached is
/// reported in [`QpSolution::tolerance`].
pub fn solve_qp(problem: &QpProblem, tol: f64, max_iter: usize) -> Result<QpSolution, QpError> {
    if !(tol > 0.0) {
        return Err(QpError::InvalidData(format!("tolerance must be positive, got {tol}")));
    }
    let n = problem.n();
    let m = problem.m();
    let bounded: Vec<usize> = (0..n).filter(|&i| problem.is_bounded(i)).collect();
    let nb = bounded.len();

    let mut z = vec![0.0; n];
    let mut s = vec![0.0; n];
    for &i in &bounded {
        z[i] = (problem.lower[i] + 1.0).max(1.0);
        s[i] = 1.0;
    }
    let mut y = vec![0.0; m];
    let mut gap_trace = Vec::new();
    let mut best: Option<QpSolution> = None;

    for iter in 0..=max_iter {
        let kkt = residuals(problem, &z, &y, &s);
        let (stat_floor, prim_floor) = roundoff_floor(problem, &z, &y, &s);
        let (stat_tol, prim_tol) = (tol.max(stat_floor), tol.max(prim_floor));
        let candidate = QpSolution {
            z: z.clone(),
            y: y.clone(),
            s: s.clone(),
            iterations: iter,
            kkt,
            tolerance: stat_tol.max(prim_tol),
            gap_trace: gap_trace.clone(),
        };
        if kkt.stationarity <= stat_tol && kkt.primal <= prim_tol && kkt.complementarity <= tol {
            return Ok(candidate);
        }
        if best.as_ref().is_none_or(|b| kkt.max() < b.kkt.max()) {
            best = Some(candidate);
        }
        if iter == max_iter {
            break;
        }

        // slack to the bounds
        let x: Vec<f64> = (0..n)
            .map(|i| if problem.is_bounded(i) { z[i] - problem.lower[i] } else { 0.0 })
            .collect();
        let mut r_dual = problem.gradient(&z);
        let aty = problem.a_eq.tr_matvec(&y);
        for i in 0..n {
            r_dual[i] -= aty[i] + s[i];
        }
        let r_prim: Vec<f64> = problem
            .a_eq
            .matvec(&z)
            .iter()
            .zip(&problem.b_eq)
            .map(|(a, b)| a - b)
            .collect();
        let mu = if nb > 0 {
            bounded.iter().map(|&i| x[i] * s[i]).sum::<f64>() / nb as f64
        } else {
            0.0
        };

        let mut d = vec![0.0; n];
        for &i in &bounded {
            d[i] = s[i] / x[i];
        }
        let system = NewtonSystem::new(problem, d)?;
        let neg_rp: Vec<f64> = r_prim.iter().map(|v| -v).collect();

        // (dz, dy, ds) for a complementarity target vector `rc`
        let direction = |rc: &[f64]| {
            let mut r1: Vec<f64> = r_dual.iter().map(|v| -v).collect();
            for &i in &bounded {
                r1[i] -= rc[i] / x[i];
            }
            let (dz, dy) = system.solve(&r1, &neg_rp);
            let mut ds = vec![0.0; n];
            for &i in &bounded {
                ds[i] = (-rc[i] - s[i] * dz[i]) / x[i];
            }
            (dz, dy, ds)
        };

        // predictor
        let mut rc = vec![0.0; n];
        for &i in &bounded {
            rc[i] = x[i] * s[i];
        }
        let (dz_aff, dy_aff, ds_aff) = direction(&rc);
        let (dz, dy, ds) = if nb > 0 {
            let a_p = max_step(&x, &dz_aff, &bounded);
            let a_d = max_step(&s, &ds_aff, &bounded);
            let mu_aff = bounded
                .iter()
                .map(|&i| (x[i] + a_p * dz_aff[i]) * (s[i] + a_d * ds_aff[i]))
                .sum::<f64>()
                / nb as f64;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
            // corrector
            for &i in &bounded {
                rc[i] = x[i] * s[i] + dz_aff[i] * ds_aff[i] - sigma * mu;
            }
            direction(&rc)
        } else {
            (dz_aff, dy_aff, ds_aff)
        };

        let alpha = if nb > 0 {
            let a_p = max_step(&x, &dz, &bounded);
            let a_d = max_step(&s, &ds, &bounded);
            (STEP_TO_BOUNDARY * a_p.min(a_d)).min(1.0)
        } else {
            1.0
        };
        for i in 0..n {
            z[i] += alpha * dz[i];
            s[i] += alpha * ds[i];
        }
        for (yi, d) in y.iter_mut().zip(&dy) {
            *yi += alpha * d;
        }
        // a full step onto the bound would leave x = 0; keep strictly interior
        for &i in &bounded {
            if z[i] <= problem.lower[i] {
                z[i] = problem.lower[i] + f64::EPSILON * (1.0 + problem.lower[i].abs());
            }
            if s[i] <= 0.0 {
                s[i] = f64::MIN_POSITIVE;
            }
        }
        let gap: f64 = bounded
            .iter()
            .map(|&i| (z[i] - problem.lower[i]) * s[i])
            .sum();
        gap_trace.push(gap);
        // divergence: infeasible or unbounded problems blow the iterates up
        if !gap.is_finite() || z.iter().chain(&s).chain(&y).any(|v| !v.is_finite() || v.abs() > 1e30) {
            break;
        }
    }

    let best = best.expect("at least one iterate evaluated");
    if best.kkt.primal > INFEASIBILITY_TOL {
        return Err(QpError::Infeasible {
            primal: best.kkt.primal,
        });
    }
    Err(QpError::MaxIterationsExceeded(Box::new(best)))
}
