//! Test-only oracles, independent of the solver paths they check.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sacr_core::linalg::DenseMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
pub fn spectral_norm(q: &DenseMatrix) -> f64 {
    let n = q.rows();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = 0.0;
    for _ in 0..500 {
        let w = q.matvec(&v);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm;
        v = w.iter().map(|x| x / norm).collect();
    }
    lambda
}

/// Naive Gauss-Jordan inverse, for small oracle systems only.
pub fn invert(a: &DenseMatrix) -> DenseMatrix {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut r = a.row(i).to_vec();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&x, &y| m[x][c].abs().partial_cmp(&m[y][c].abs()).unwrap())
            .unwrap();
        m.swap(c, piv);
        let d = m[c][c];
        for k in 0..2 * n {
            m[c][k] /= d;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                for k in 0..2 * n {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    DenseMatrix::from_fn(n, n, |i, j| m[i][n + j])
}

/// Least-squares solve through naive normal equations and Gauss-Jordan.
pub fn lstsq(a: &DenseMatrix, y: &[f64]) -> Vec<f64> {
    invert(&a.gram()).matvec(&a.tr_matvec(y))
}

/// Euclidean projection onto `{A z = b} ∩ {z ≥ lower}` by Dykstra's
/// alternating projections.
pub struct FeasibleProjector {
    a: DenseMatrix,
    b: Vec<f64>,
    /// `Aᵀ(AAᵀ)⁻¹`
    pinv: DenseMatrix,
    lower: Vec<f64>,
}

impl FeasibleProjector {
    pub fn new(a: DenseMatrix, b: Vec<f64>, lower: Vec<f64>) -> Self {
        let pinv = if a.rows() > 0 {
            a.transpose().matmul(&invert(&a.transpose().gram()))
        } else {
            DenseMatrix::zeros(lower.len(), 0)
        };
        Self { a, b, pinv, lower }
    }

    fn onto_affine(&self, z: &[f64]) -> Vec<f64> {
        if self.a.rows() == 0 {
            return z.to_vec();
        }
        let r: Vec<f64> = self.a.matvec(z).iter().zip(&self.b).map(|(u, v)| u - v).collect();
        let c = self.pinv.matvec(&r);
        z.iter().zip(&c).map(|(u, v)| u - v).collect()
    }

    fn onto_box(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(&self.lower).map(|(u, l)| u.max(*l)).collect()
    }

    pub fn project(&self, z: &[f64]) -> Vec<f64> {
        if self.a.rows() == 0 {
            return self.onto_box(z);
        }
        let n = z.len();
        let mut x = z.to_vec();
        let mut p = vec![0.0; n];
        let mut q = vec![0.0; n];
        for _ in 0..10_000 {
            let yv = self.onto_affine(&(0..n).map(|i| x[i] + p[i]).collect::<Vec<_>>());
            for i in 0..n {
                p[i] = x[i] + p[i] - yv[i];
            }
            let xn = self.onto_box(&(0..n).map(|i| yv[i] + q[i]).collect::<Vec<_>>());
            for i in 0..n {
                q[i] = yv[i] + q[i] - xn[i];
            }
            let change = xn.iter().zip(&x).fold(0.0_f64, |m, (u, v)| m.max((u - v).abs()));
            x = xn;
            if change < 1e-15 {
                break;
            }
        }
        self.onto_affine(&x)
    }
}

/// Projected gradient descent on `½zᵀQz + qᵀz` with step `1e-4 / ‖Q‖`
/// for up to 10⁶ iterations.
pub fn projected_gradient(
    quad: &DenseMatrix,
    linear: &[f64],
    projector: &FeasibleProjector,
    start: &[f64],
) -> Vec<f64> {
    let step = 1e-4 / spectral_norm(quad).max(1e-12);
    let mut z = projector.project(start);
    for _ in 0..1_000_000 {
        let g = quad.matvec(&z);
        let cand: Vec<f64> = z
            .iter()
            .zip(g.iter().zip(linear))
            .map(|(zi, (gi, qi))| zi - step * (gi + qi))
            .collect();
        let next = projector.project(&cand);
        let change = next.iter().zip(&z).fold(0.0_f64, |m, (u, v)| m.max((u - v).abs()));
        z = next;
        if change < 1e-16 {
            break;
        }
    }
    z
}

pub fn quad_objective(quad: &DenseMatrix, linear: &[f64], z: &[f64]) -> f64 {
    let qz = quad.matvec(z);
    0.5 * z.iter().zip(&qz).map(|(a, b)| a * b).sum::<f64>()
        + z.iter().zip(linear).map(|(a, b)| a * b).sum::<f64>()
}

/// Euclidean projection onto `{w ≥ 0, Σw = total}` by the sort-and-shift
/// rule.
pub fn project_simplex(v: &[f64], total: f64) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, uk) in u.iter().enumerate() {
        cum += uk;
        let t = (cum - total) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Column-centered copy of `a` and centered copy of `y`.
pub fn center(a: &DenseMatrix, y: &[f64]) -> (DenseMatrix, Vec<f64>) {
    let n = a.rows() as f64;
    let means: Vec<f64> = (0..a.cols()).map(|j| a.column(j).iter().sum::<f64>() / n).collect();
    let ac = DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)] - means[j]);
    let ym = y.iter().sum::<f64>() / n;
    (ac, y.iter().map(|v| v - ym).collect())
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (u, v)| m.max((u - v).abs()))
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Unconstrained QP over `(β₀, β)` for `‖y - β₀ - Aβ‖² + (β-c)ᵀ P (β-c)`,
/// the generic form behind the closed-form ridge family.
pub fn penalized_ls_qp(a: &DenseMatrix, y: &[f64], penalty: &DenseMatrix, c: &[f64]) -> sacr_core::qp::QpProblem {
    let (n, p) = (a.rows(), a.cols());
    let x = DenseMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { a[(i, j - 1)] });
    let mut quad = x.gram().scale(2.0);
    for i in 0..p {
        for j in 0..p {
            quad[(i + 1, j + 1)] += 2.0 * penalty[(i, j)];
        }
    }
    let pc = penalty.matvec(c);
    let mut linear: Vec<f64> = x.tr_matvec(y).iter().map(|v| -2.0 * v).collect();
    for j in 0..p {
        linear[j + 1] -= 2.0 * pc[j];
    }
    sacr_core::qp::QpProblem::new(
        quad,
        linear,
        DenseMatrix::zeros(0, p + 1),
        vec![],
        vec![f64::NEG_INFINITY; p + 1],
    )
    .unwrap()
}

/// Random strongly convex QP with a known strictly feasible point.
pub fn random_qp(seed: u64) -> sacr_core::qp::QpProblem {
    let mut r = rng(seed);
    let n = r.random_range(2..=20);
    let m = r.random_range(0..=2.min(n - 1));
    let mf = uniform_matrix(&mut r, n, n);
    let mut quad = mf.gram().scale(1.0 / n as f64);
    quad.add_diagonal(1.0);
    let linear: Vec<f64> = uniform_vec(&mut r, n).iter().map(|v| 3.0 * v).collect();
    let lower: Vec<f64> = (0..n)
        .map(|_| if r.random_bool(0.6) { r.random_range(-1.0..0.0) } else { f64::NEG_INFINITY })
        .collect();
    let feasible: Vec<f64> = lower
        .iter()
        .map(|l| if l.is_finite() { l + r.random_range(0.1..1.0) } else { r.random_range(-1.0..1.0) })
        .collect();
    let a_eq = uniform_matrix(&mut r, m, n);
    let b_eq = a_eq.matvec(&feasible);
    sacr_core::qp::QpProblem::new(quad, linear, a_eq, b_eq, lower).unwrap()
}
