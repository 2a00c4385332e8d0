//! Plain-text dump of a [`QpProblem`], for debugging.
//!
//! ```text
//! qp <n> <m>
//! Q
//! <n rows of n values>
//! q
//! <n values>
//! Aeq
//! <m rows of n values>
//! beq
//! <m values>
//! lower
//! <n values, `-inf` for unbounded>
//! ```
//!
//! Values are whitespace separated and written in shortest round-trip form.
//! The layout may change between versions.

use std::fmt::Write as _;

use super::{QpError, QpProblem};
use crate::linalg::DenseMatrix;

fn push_row(out: &mut String, row: &[f64]) {
    let mut first = true;
    for v in row {
        if !first {
            out.push(' ');
        }
        first = false;
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

pub fn write_problem(problem: &QpProblem) -> String {
    let (n, m) = (problem.n(), problem.m());
    let mut out = format!("qp {n} {m}\nQ\n");
    for i in 0..n {
        push_row(&mut out, problem.quad().row(i));
    }
    out.push_str("q\n");
    push_row(&mut out, problem.linear());
    out.push_str("Aeq\n");
    for i in 0..m {
        push_row(&mut out, problem.a_eq().row(i));
    }
    out.push_str("beq\n");
    push_row(&mut out, problem.b_eq());
    out.push_str("lower\n");
    push_row(&mut out, problem.lower());
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<(usize, &'a str), QpError> {
        self.inner
            .next()
            .map(|(i, l)| (i + 1, l.trim()))
            .ok_or_else(|| QpError::InvalidData("unexpected end of problem dump".into()))
    }

    fn expect(&mut self, tag: &str) -> Result<(), QpError> {
        let (no, line) = self.next_line()?;
        if line != tag {
            return Err(QpError::InvalidData(format!(
                "line {no}: expected `{tag}`, found `{line}`"
            )));
        }
        Ok(())
    }

    fn values(&mut self, len: usize) -> Result<Vec<f64>, QpError> {
        let (no, line) = self.next_line()?;
        let vals = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| QpError::InvalidData(format!("line {no}: bad number `{t}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if vals.len() != len {
            return Err(QpError::InvalidData(format!(
                "line {no}: expected {len} values, found {}",
                vals.len()
            )));
        }
        Ok(vals)
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<DenseMatrix, QpError> {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            data.extend(self.values(cols)?);
        }
        Ok(DenseMatrix::from_vec(rows, cols, data)?)
    }
}

pub fn read_problem(text: &str) -> Result<QpProblem, QpError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (_, header) = lines.next_line()?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    let (n, m) = match dims.as_slice() {
        ["qp", n, m] => (
            n.parse::<usize>()
                .map_err(|_| QpError::InvalidData(format!("bad header `{header}`")))?,
            m.parse::<usize>()
                .map_err(|_| QpError::InvalidData(format!("bad header `{header}`")))?,
        ),
        _ => return Err(QpError::InvalidData(format!("bad header `{header}`"))),
    };
    lines.expect("Q")?;
    let quad = lines.matrix(n, n)?;
    lines.expect("q")?;
    let linear = lines.values(n)?;
    lines.expect("Aeq")?;
    let a_eq = lines.matrix(m, n)?;
    lines.expect("beq")?;
    let b_eq = lines.values(m)?;
    lines.expect("lower")?;
    let lower = lines.values(n)?;
    QpProblem::new(quad, linear, a_eq, b_eq, lower)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_round_trips_bit_exactly() {
        let p = QpProblem::new(
            DenseMatrix::from_rows(&[vec![2.0, 0.1], vec![0.1, 1.0 / 3.0]]).unwrap(),
            vec![-1.0, 1e-17],
            DenseMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap(),
            vec![0.7],
            vec![f64::NEG_INFINITY, 0.0],
        )
        .unwrap();
        let text = write_problem(&p);
        assert!(text.contains("-inf"));
        assert_eq!(read_problem(&text).unwrap(), p);
    }

    #[test]
    fn empty_equality_block() {
        let p = QpProblem::bounded(DenseMatrix::identity(1), vec![1.0], vec![0.0]).unwrap();
        assert_eq!(read_problem(&write_problem(&p)).unwrap(), p);
    }

    #[test]
    fn malformed_dump_reports_line() {
        let err = read_problem("qp 1 0\nQ\n1 2\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }
}
