use serde::{Deserialize, Serialize};

use super::logistic::sigmoid;
use super::{Fit, FitError};
use crate::fda::{design_matrix, FunctionalDataset, StandardizationParams, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    Identity,
    Logit,
}

/// A fit together with everything needed to score new curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub fit: Fit,
    pub task: Task,
    pub link: Link,
    /// Whether the fit was trained on standardized curves.
    pub standardized: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardization: Option<StandardizationParams>,
}

impl TrainedModel {
    /// Link follows the estimator; `standardization` records the training
    /// transform, if any.
    pub fn new(fit: Fit, task: Task, standardization: Option<StandardizationParams>) -> Self {
        let link = if fit.estimator().is_logistic() {
            Link::Logit
        } else {
            Link::Identity
        };
        Self {
            fit,
            task,
            link,
            standardized: standardization.is_some(),
            standardization,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    /// Linear predictor on the response scale (regression) or the logit
    /// scale (logistic link).
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<Vec<f64>>,
    /// Predicted class in {0, 1} for classification tasks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<f64>>,
}

/// Scores `dataset` with the model, applying the training standardization
/// first. Least-squares fits on a classification task act as a linear
/// probability model thresholded at 0.5.
pub fn predict(model: &TrainedModel, dataset: &FunctionalDataset) -> Result<Predictions, FitError> {
    let beta = model.fit.beta();
    if dataset.p() != beta.len() {
        return Err(FitError::GridMismatch {
            expected: beta.len(),
            found: dataset.p(),
        });
    }
    let (design, offset) = match (&model.standardization, model.standardized) {
        (Some(params), _) => {
            let curves = params.apply_curves(dataset.curves())?;
            let a = design_matrix(&dataset.with_curves(curves));
            (a, params.response_mean)
        }
        (None, true) => return Err(FitError::MissingStandardization),
        (None, false) => (design_matrix(dataset), 0.0),
    };
    let b0 = model.fit.intercept() + offset;
    let values: Vec<f64> = design.matvec(beta).into_iter().map(|v| b0 + v).collect();
    let (probabilities, labels) = match (model.link, model.task) {
        (Link::Logit, _) => {
            let prob: Vec<f64> = values.iter().map(|e| sigmoid(*e)).collect();
            let lab = values.iter().map(|e| if *e >= 0.0 { 1.0 } else { 0.0 }).collect();
            (Some(prob), Some(lab))
        }
        (Link::Identity, Task::Classification) => {
            let lab = values.iter().map(|v| if *v >= 0.5 { 1.0 } else { 0.0 }).collect();
            (None, Some(lab))
        }
        (Link::Identity, Task::Regression) => (None, None),
    };
    Ok(Predictions {
        values,
        probabilities,
        labels,
    })
}
