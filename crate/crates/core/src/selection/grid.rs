use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pipeline::{fit_prepared, metric_for, model_from, prepare, score, EstimatorSpec};
use super::{complement, derive_seed, kfold_split, mean_sd, Metric, SelectionError};
use crate::estimators::{Estimator, Hyperparams};
use crate::fda::{FunctionalDataset, Task};

/// Candidate hyperparameters. Only the axes an estimator uses enter its
/// cartesian product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub lambdas: Vec<f64>,
    pub phis: Vec<f64>,
    pub gammas: Vec<f64>,
    pub phi_relax: Vec<f64>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        let deciles: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        Self {
            lambdas: Self::default_lambdas(),
            phis: deciles.clone(),
            gammas: vec![1.0],
            phi_relax: deciles,
        }
    }
}

impl HyperGrid {
    /// 20 values log-spaced over `[1e-4, 1e4]`.
    pub fn default_lambdas() -> Vec<f64> {
        (0..20).map(|i| 10f64.powf(-4.0 + 8.0 * i as f64 / 19.0)).collect()
    }

    pub fn validate(&self) -> Result<(), SelectionError> {
        let bad = |msg: String| Err(SelectionError::InvalidGrid(msg));
        if self.lambdas.is_empty() {
            return bad("no lambda values".into());
        }
        if let Some(l) = self.lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return bad(format!("lambda must be positive, got {l}"));
        }
        for (name, values) in [("phi", &self.phis), ("phi_relax", &self.phi_relax)] {
            if let Some(v) = values.iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
                return bad(format!("{name} must lie in (0, 1], got {v}"));
            }
        }
        if let Some(g) = self.gammas.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return bad(format!("gamma must be positive, got {g}"));
        }
        Ok(())
    }

    /// Grid points for `estimator`, λ-major.
    pub fn points(&self, estimator: Estimator) -> Result<Vec<Hyperparams>, SelectionError> {
        self.validate()?;
        let (name, secondary, set): (&str, &[f64], fn(&mut Hyperparams, f64)) = match estimator {
            Estimator::Sacr | Estimator::SacrLogistic => ("phi", &self.phis, |h, v| h.phi = Some(v)),
            Estimator::AdaptiveLasso => ("gamma", &self.gammas, |h, v| h.gamma = Some(v)),
            Estimator::RelaxedLasso => ("phi_relax", &self.phi_relax, |h, v| h.phi_relax = Some(v)),
            _ => return Ok(self.lambdas.iter().map(|&l| Hyperparams::lambda(l)).collect()),
        };
        if secondary.is_empty() {
            return Err(SelectionError::InvalidGrid(format!("{estimator} needs {name} values")));
        }
        let mut out = Vec::with_capacity(self.lambdas.len() * secondary.len());
        for &l in &self.lambdas {
            for &v in secondary {
                let mut h = Hyperparams::lambda(l);
                set(&mut h, v);
                out.push(h);
            }
        }
        Ok(out)
    }
}

fn secondary(h: &Hyperparams) -> f64 {
    h.phi.or(h.gamma).or(h.phi_relax).unwrap_or(0.0)
}

/// Lower loss first, then more regularization: larger λ, then larger
/// secondary parameter.
fn preference(a: (f64, &Hyperparams), b: (f64, &Hyperparams)) -> Ordering {
    a.0.total_cmp(&b.0)
        .then(b.1.lambda.total_cmp(&a.1.lambda))
        .then(secondary(b.1).total_cmp(&secondary(a.1)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPointSummary {
    pub hyperparams: Hyperparams,
    /// Validation metric per inner fold (mse, or accuracy in percent).
    pub fold_scores: Vec<f64>,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    /// First fit failure, if the point was excluded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub metric: Metric,
    pub selected: Hyperparams,
    pub points: Vec<GridPointSummary>,
}

impl GridSearchResult {
    pub fn selected_summary(&self) -> &GridPointSummary {
        self.points
            .iter()
            .find(|p| p.hyperparams == self.selected)
            .expect("selected point belongs to the grid")
    }
}

/// k-fold grid search. Standardization, initial estimates and default
/// centers are recomputed on each inner training set.
pub fn grid_search(
    spec: &EstimatorSpec,
    data: &FunctionalDataset,
    grid: &HyperGrid,
    k: usize,
    seed: u64,
    stratify: bool,
) -> Result<GridSearchResult, SelectionError> {
    let points = grid.points(spec.estimator)?;
    let labels = (stratify && data.task() == Task::Classification).then(|| data.response());
    let folds = kfold_split(data.n(), k, seed, labels)?;
    let metric = metric_for(data.task());

    // scores[f][g]: fold-major so each fold's preparation is shared
    let scores: Vec<Vec<Result<f64, String>>> = folds
        .iter()
        .enumerate()
        .map(|(f, val_idx)| {
            let train = data.subset(&complement(&folds, f));
            let val = data.subset(val_idx);
            match prepare(spec, &train, derive_seed(seed, f as u64 + 1)) {
                Err(e) => vec![Err(e.to_string()); points.len()],
                Ok(prep) => points
                    .par_iter()
                    .map(|hp| {
                        let fit = fit_prepared(spec, &prep, hp).map_err(|e| e.to_string())?;
                        let s = score(&model_from(&prep, fit), &val).map_err(|e| e.to_string())?;
                        if s.is_finite() {
                            Ok(s)
                        } else {
                            Err(format!("non-finite validation metric at {hp}"))
                        }
                    })
                    .collect(),
            }
        })
        .collect();

    let summaries: Vec<GridPointSummary> = points
        .iter()
        .enumerate()
        .map(|(g, hp)| {
            let mut fold_scores = Vec::with_capacity(folds.len());
            let mut error = None;
            for row in &scores {
                match &row[g] {
                    Ok(s) => fold_scores.push(*s),
                    Err(e) => {
                        error.get_or_insert_with(|| e.clone());
                    }
                }
            }
            let (mean, sd) = if error.is_none() {
                let (m, s) = mean_sd(&fold_scores);
                (Some(m), Some(s))
            } else {
                (None, None)
            };
            GridPointSummary {
                hyperparams: *hp,
                fold_scores,
                mean,
                sd,
                error,
            }
        })
        .collect();

    let selected = summaries
        .iter()
        .filter_map(|p| p.mean.map(|m| (metric.loss(m), &p.hyperparams)))
        .min_by(|a, b| preference(*a, *b))
        .map(|(_, h)| *h)
        .ok_or_else(|| {
            let first = summaries.iter().find_map(|p| p.error.clone()).unwrap_or_default();
            SelectionError::NoViablePoint(first)
        })?;
    Ok(GridSearchResult {
        metric,
        selected,
        points: summaries,
    })
}
