use super::DataError;
use crate::linalg::DenseMatrix;

/// Knot vector with `degree + 1` copies of each boundary and `inner`
/// equispaced interior knots strictly between them.
pub fn clamped_knots(degree: usize, inner: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut knots = vec![lo; degree + 1];
    let step = (hi - lo) / (inner + 1) as f64;
    knots.extend((1..=inner).map(|k| lo + k as f64 * step));
    knots.extend(std::iter::repeat_n(hi, degree + 1));
    knots
}

/// Evaluates every B-spline basis function of the given degree at each `t`
/// with the Cox–de Boor recursion.
///
/// Returns a `t.len() × (knots.len() - degree - 1)` matrix. Intervals are
/// half-open `[k_i, k_{i+1})` except that the last knot belongs to the last
/// nonempty interval.
pub fn bspline_basis(degree: usize, knots: &[f64], ts: &[f64]) -> Result<DenseMatrix, DataError> {
    if knots.len() < degree + 2 {
        return Err(DataError::Invalid(format!(
            "{} knots cannot support degree {degree}",
            knots.len()
        )));
    }
    if knots.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(DataError::Invalid("knots must be nondecreasing".into()));
    }
    let n_basis = knots.len() - degree - 1;
    let (lo, hi) = (knots[0], knots[knots.len() - 1]);
    let mut out = DenseMatrix::zeros(ts.len(), n_basis);
    for (row, &t) in ts.iter().enumerate() {
        if !(lo..=hi).contains(&t) {
            return Err(DataError::OutsideKnotRange { t, lo, hi });
        }
        // degree-0 indicators over all knot intervals
        let n0 = knots.len() - 1;
        let mut b: Vec<f64> = (0..n0)
            .map(|i| {
                if knots[i] <= t && t < knots[i + 1] {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        if t == hi {
            if let Some(last) = (0..n0).rev().find(|&i| knots[i] < knots[i + 1]) {
                b[last] = 1.0;
            }
        }
        for d in 1..=degree {
            for i in 0..n0 - d {
                let left_den = knots[i + d] - knots[i];
                let right_den = knots[i + d + 1] - knots[i + 1];
                let left = if left_den > 0.0 {
                    (t - knots[i]) / left_den * b[i]
                } else {
                    0.0
                };
                let right = if right_den > 0.0 {
                    (knots[i + d + 1] - t) / right_den * b[i + 1]
                } else {
                    0.0
                };
                b[i] = left + right;
            }
        }
        out.row_mut(row).copy_from_slice(&b[..n_basis]);
    }
    Ok(out)
}
