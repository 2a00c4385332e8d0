use serde::{Deserialize, Serialize};

use super::{derive_seed, kfold_split, metric_accuracy, metric_mse, complement, Metric, SelectionError};
use crate::estimators::{
    fit_adaptive_lasso, fit_bar, fit_centered_ridge, fit_lasso, fit_logistic_ridge, fit_nng,
    fit_relaxed_lasso, fit_ridge, fit_roughness, fit_sacr, fit_sacr_logistic, predict, Estimator,
    Fit, FitError, Hyperparams, TrainedModel,
};
use crate::fda::{design_matrix, standardize, FunctionalDataset, StandardizationParams, Task};
use crate::linalg::DenseMatrix;

/// Where a centered estimator takes its center from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CenterSource {
    /// Ridge (or logistic ridge) at the same λ on the training data for
    /// SACR, zero for centered ridge.
    #[default]
    Default,
    /// A user-supplied center on the standardized scale.
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub estimator: Estimator,
    #[serde(default)]
    pub center: CenterSource,
}

impl EstimatorSpec {
    pub fn new(estimator: Estimator) -> Self {
        Self {
            estimator,
            center: CenterSource::Default,
        }
    }

    pub fn with_center(estimator: Estimator, center: Vec<f64>) -> Self {
        Self {
            estimator,
            center: CenterSource::Fixed(center),
        }
    }

    fn needs_initial(&self) -> bool {
        matches!(self.estimator, Estimator::AdaptiveLasso | Estimator::Nng | Estimator::Bar)
    }
}

/// Training data after standardization, shared by every grid point.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub design: DenseMatrix,
    pub response: Vec<f64>,
    pub task: Task,
    pub standardization: StandardizationParams,
    /// Ridge initial estimate for the two-stage estimators.
    pub initial: Option<Vec<f64>>,
}

/// Ridge at the λ that a 3-fold CV inside the training data prefers.
fn ridge_initial(a: &DenseMatrix, y: &[f64], seed: u64) -> Result<Vec<f64>, FitError> {
    let lambdas = super::HyperGrid::default_lambdas();
    let n = a.rows();
    let k = 3.min(n);
    let mut best: Option<(f64, f64)> = None;
    if k >= 2 {
        let folds = kfold_split(n, k, seed, None).map_err(|e| FitError::Invalid(e.to_string()))?;
        // largest λ first so that `<` keeps the larger one on ties
        for &lambda in lambdas.iter().rev() {
            let mut total = 0.0;
            for (f, val) in folds.iter().enumerate() {
                let tr = complement(&folds, f);
                let fit = fit_ridge(&a.select_rows(&tr), &subset(y, &tr), lambda)?;
                let pred = a.select_rows(val).matvec(&fit.beta);
                total += val
                    .iter()
                    .zip(pred)
                    .map(|(&i, p)| (y[i] - fit.intercept - p).powi(2))
                    .sum::<f64>();
            }
            if best.is_none_or(|(s, _)| total < s) {
                best = Some((total, lambda));
            }
        }
    }
    let lambda = best.map_or(1.0, |(_, l)| l);
    Ok(fit_ridge(a, y, lambda)?.beta)
}

fn subset(v: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| v[i]).collect()
}

/// Standardizes the training data and, for adaptive lasso, NNG and BAR,
/// computes the ridge initial estimate.
pub fn prepare(spec: &EstimatorSpec, train: &FunctionalDataset, seed: u64) -> Result<Prepared, FitError> {
    if spec.estimator.is_logistic() && train.task() != Task::Classification {
        return Err(FitError::Invalid(format!("{} needs a classification response", spec.estimator)));
    }
    let (std, standardization) = standardize(train)?;
    let design = design_matrix(&std);
    let response = std.response().to_vec();
    let initial = if spec.needs_initial() {
        Some(ridge_initial(&design, &response, seed)?)
    } else {
        None
    };
    Ok(Prepared {
        design,
        response,
        task: train.task(),
        standardization,
        initial,
    })
}

fn need<T>(value: Option<T>, what: &str, estimator: Estimator) -> Result<T, FitError> {
    value.ok_or_else(|| FitError::Invalid(format!("{estimator} needs {what}")))
}

/// Fits one grid point on prepared data.
pub fn fit_prepared(spec: &EstimatorSpec, prep: &Prepared, hp: &Hyperparams) -> Result<Fit, FitError> {
    let (a, y, l) = (&prep.design, &prep.response[..], hp.lambda);
    let e = spec.estimator;
    let fixed = match &spec.center {
        CenterSource::Fixed(c) => Some(c.as_slice()),
        CenterSource::Default => None,
    };
    let initial = || need(prep.initial.as_deref(), "an initial estimate", e);
    let fit = match e {
        Estimator::Ridge => Fit::Linear(fit_ridge(a, y, l)?),
        Estimator::CenteredRidge => {
            let zero = vec![0.0; a.cols()];
            Fit::Linear(fit_centered_ridge(a, y, l, fixed.unwrap_or(&zero))?)
        }
        Estimator::Roughness => Fit::Linear(fit_roughness(a, y, l)?),
        Estimator::Sacr => Fit::Sacr(fit_sacr(a, y, l, need(hp.phi, "phi", e)?, fixed)?),
        Estimator::SacrLogistic => {
            Fit::Sacr(fit_sacr_logistic(a, y, l, need(hp.phi, "phi", e)?, fixed)?)
        }
        Estimator::Lasso => Fit::Linear(fit_lasso(a, y, l)?),
        Estimator::AdaptiveLasso => {
            Fit::Linear(fit_adaptive_lasso(a, y, l, hp.gamma.unwrap_or(1.0), initial()?)?)
        }
        Estimator::RelaxedLasso => {
            Fit::Linear(fit_relaxed_lasso(a, y, l, need(hp.phi_relax, "phi_relax", e)?)?)
        }
        Estimator::Nng => Fit::Linear(fit_nng(a, y, l, initial()?)?),
        Estimator::Bar => Fit::Linear(fit_bar(a, y, l, initial()?)?),
        Estimator::LogisticRidge => Fit::Linear(fit_logistic_ridge(a, y, l)?),
    };
    Ok(fit)
}

pub(crate) fn model_from(prep: &Prepared, fit: Fit) -> TrainedModel {
    TrainedModel::new(fit, prep.task, Some(prep.standardization.clone()))
}

/// Standardizes `train`, fits at `hp` and packages the model for `predict`.
pub fn train(
    spec: &EstimatorSpec,
    train: &FunctionalDataset,
    hp: &Hyperparams,
    seed: u64,
) -> Result<TrainedModel, FitError> {
    let prep = prepare(spec, train, derive_seed(seed, 0))?;
    let fit = fit_prepared(spec, &prep, hp)?;
    Ok(model_from(&prep, fit))
}

pub fn metric_for(task: Task) -> Metric {
    match task {
        Task::Regression => Metric::Mse,
        Task::Classification => Metric::Accuracy,
    }
}

/// Test metric of `model` on raw (unstandardized) data: mse for
/// regression, accuracy for classification.
pub fn score(model: &TrainedModel, data: &FunctionalDataset) -> Result<f64, SelectionError> {
    let pred = predict(model, data)?;
    match data.task() {
        Task::Regression => metric_mse(&pred.values, data.response()),
        Task::Classification => {
            let labels = pred.labels.ok_or_else(|| {
                SelectionError::Fit(FitError::Invalid("classification model produced no labels".into()))
            })?;
            metric_accuracy(&labels, data.response())
        }
    }
}
