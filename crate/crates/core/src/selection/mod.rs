//! Fold splitting, metrics, grid search and nested cross-validation.

mod grid;
mod nested;
mod pipeline;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use grid::{grid_search, GridPointSummary, GridSearchResult, HyperGrid};
pub use nested::{
    format_table, nested_evaluate, protocol_description, table_label, CvReport, NestedConfig, OuterFoldResult,
};
pub use pipeline::{
    fit_prepared, metric_for, prepare, score, train, CenterSource, EstimatorSpec, Prepared,
};

use crate::estimators::FitError;
use crate::fda::DataError;

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("cannot split {n} samples into {k} folds")]
    KTooLarge { n: usize, k: usize },
    #[error("need at least 2 folds, got {0}")]
    KTooSmall(usize),
    #[error("length mismatch: {left} predictions vs {right} targets")]
    LengthMismatch { left: usize, right: usize },
    #[error("metric of an empty sample")]
    Empty,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("every grid point failed; first failure: {0}")]
    NoViablePoint(String),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Mse,
    Accuracy,
}

impl Metric {
    /// Quantity minimized during selection.
    pub fn loss(self, value: f64) -> f64 {
        match self {
            Metric::Mse => value,
            Metric::Accuracy => 100.0 - value,
        }
    }

    pub fn caption(self) -> &'static str {
        match self {
            Metric::Mse => "mean-square error",
            Metric::Accuracy => "accuracy (%)",
        }
    }
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<(), SelectionError> {
    if a.len() != b.len() {
        return Err(SelectionError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(SelectionError::Empty);
    }
    Ok(())
}

pub fn metric_mse(predictions: &[f64], truth: &[f64]) -> Result<f64, SelectionError> {
    check_lengths(predictions, truth)?;
    let ss: f64 = predictions.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum();
    Ok(ss / truth.len() as f64)
}

/// Percentage of exact matches.
pub fn metric_accuracy(predicted: &[f64], truth: &[f64]) -> Result<f64, SelectionError> {
    check_lengths(predicted, truth)?;
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(100.0 * hits as f64 / truth.len() as f64)
}

/// Independent child seed for a numbered sub-task.
pub(crate) fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}

/// Splits `0..n` into `k` disjoint folds whose sizes differ by at most one.
///
/// With `stratify` labels, indices are shuffled within each class and
/// dealt round-robin class after class, so each fold holds every class in
/// proportion up to one sample. Each fold is returned sorted.
pub fn kfold_split(
    n: usize,
    k: usize,
    seed: u64,
    stratify: Option<&[f64]>,
) -> Result<Vec<Vec<usize>>, SelectionError> {
    if k < 2 {
        return Err(SelectionError::KTooSmall(k));
    }
    if k > n {
        return Err(SelectionError::KTooLarge { n, k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order: Vec<usize> = match stratify {
        None => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            idx
        }
        Some(labels) => {
            if labels.len() != n {
                return Err(SelectionError::LengthMismatch {
                    left: labels.len(),
                    right: n,
                });
            }
            let mut classes: Vec<f64> = labels.to_vec();
            classes.sort_by(f64::total_cmp);
            classes.dedup();
            let mut order = Vec::with_capacity(n);
            for c in classes {
                let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
                members.shuffle(&mut rng);
                order.extend(members);
            }
            order
        }
    };
    let mut folds = vec![Vec::new(); k];
    for (pos, i) in order.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Indices outside fold `f`.
pub(crate) fn complement(folds: &[Vec<usize>], f: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|(g, _)| *g != f)
        .flat_map(|(_, v)| v.iter().copied())
        .collect();
    idx.sort_unstable();
    idx
}

pub(crate) fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}
