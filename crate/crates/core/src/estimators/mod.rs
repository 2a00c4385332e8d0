//! Fitted models: the closed-form ridge family, the adaptively centered
//! ridge QP and the sparse baselines.
//!
//! Every routine takes the design `A` (with `A·β ≈ ∫ x β`) and the
//! response. The intercept is never penalized: least-squares estimators
//! work on column-centered `A` and centered `y` and recover
//! `β₀ = ȳ - Āᵀβ`, while the QP-based estimators carry `β₀` explicitly.

mod bar;
mod lasso;
mod logistic;
mod nng;
mod predict;
mod ridge;
mod sacr;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bar::fit_bar;
pub use lasso::{fit_adaptive_lasso, fit_lasso, fit_relaxed_lasso, LASSO_MAX_SWEEPS};
pub use logistic::{fit_logistic_ridge, fit_sacr_logistic, LogisticSacrObjective};
pub use nng::fit_nng;
pub use predict::{predict, Link, Predictions, TrainedModel};
pub use ridge::{fit_centered_ridge, fit_ridge, fit_roughness, ROUGHNESS_NULLSPACE_GUARD};
pub use sacr::{assemble_sacr_qp, fit_sacr, W_TIKHONOV};

use crate::fda::DataError;
use crate::linalg::{DenseMatrix, LinalgError};
use crate::qp::{KktReport, QpError};

#[derive(Debug, Error)]
pub enum FitError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("QP solve failed at {hyperparams}: {source}")]
    Solver {
        hyperparams: Hyperparams,
        #[source]
        source: QpError,
    },
    #[error("both classes must be present in the labels")]
    BothClassesRequired,
    #[error("initial estimate is identically zero; every adaptive weight is infinite")]
    AllWeightsInfinite,
    #[error("grid length mismatch: fit has {expected} points, data has {found}")]
    GridMismatch { expected: usize, found: usize },
    #[error("model has no standardization parameters")]
    MissingStandardization,
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    Ridge,
    CenteredRidge,
    Roughness,
    Sacr,
    SacrLogistic,
    Lasso,
    AdaptiveLasso,
    RelaxedLasso,
    Nng,
    Bar,
    /// L2-penalized logistic regression, the default center for
    /// `SacrLogistic`.
    LogisticRidge,
}

impl Estimator {
    pub const ALL: [Estimator; 11] = [
        Estimator::Ridge,
        Estimator::CenteredRidge,
        Estimator::Roughness,
        Estimator::Sacr,
        Estimator::SacrLogistic,
        Estimator::Lasso,
        Estimator::AdaptiveLasso,
        Estimator::RelaxedLasso,
        Estimator::Nng,
        Estimator::Bar,
        Estimator::LogisticRidge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Ridge => "ridge",
            Estimator::CenteredRidge => "centered-ridge",
            Estimator::Roughness => "roughness",
            Estimator::Sacr => "sacr",
            Estimator::SacrLogistic => "sacr-logistic",
            Estimator::Lasso => "lasso",
            Estimator::AdaptiveLasso => "adaptive-lasso",
            Estimator::RelaxedLasso => "relaxed-lasso",
            Estimator::Nng => "nng",
            Estimator::Bar => "bar",
            Estimator::LogisticRidge => "logistic-ridge",
        }
    }

    /// Fits through the logistic link.
    pub fn is_logistic(self) -> bool {
        matches!(self, Estimator::SacrLogistic | Estimator::LogisticRidge)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Estimator::ALL.iter().map(|e| e.name()).collect();
                format!("unknown estimator `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// Hyperparameters a fit was produced with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Hyperparams {
    pub lambda: f64,
    /// SACR balance between the centering and roughness terms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    /// Adaptive-lasso weight exponent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Relaxed-lasso relaxation factor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_relax: Option<f64>,
}

impl Hyperparams {
    pub fn lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }
}

impl fmt::Display for Hyperparams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "lambda={}", self.lambda)?;
        if let Some(v) = self.phi {
            write!(f, " phi={v}")?;
        }
        if let Some(v) = self.gamma {
            write!(f, " gamma={v}")?;
        }
        if let Some(v) = self.phi_relax {
            write!(f, " phi_relax={v}")?;
        }
        Ok(())
    }
}

/// Conditions worth surfacing alongside an otherwise usable fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitFlag {
    NonConvergence,
    EmptyActiveSet,
    SweepLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub estimator: Estimator,
    pub hyperparams: Hyperparams,
    pub intercept: f64,
    pub beta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<FitFlag>,
}

impl LinearFit {
    pub fn is_flagged(&self, flag: FitFlag) -> bool {
        self.flags.contains(&flag)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SacrFit {
    #[serde(flatten)]
    pub linear: LinearFit,
    /// Weight function on the grid, nonnegative with unit mean.
    pub w: Vec<f64>,
    /// Initial centerfunction `β̃`.
    pub center: Vec<f64>,
    pub lambda: f64,
    pub phi: f64,
    pub kkt: KktReport,
}

impl SacrFit {
    /// Effective penalty center `w ∘ β̃`.
    pub fn centerfunction(&self) -> Vec<f64> {
        self.w.iter().zip(&self.center).map(|(w, c)| w * c).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Fit {
    Linear(LinearFit),
    Sacr(SacrFit),
}

impl Fit {
    pub fn linear(&self) -> &LinearFit {
        match self {
            Fit::Linear(f) => f,
            Fit::Sacr(f) => &f.linear,
        }
    }

    pub fn estimator(&self) -> Estimator {
        self.linear().estimator
    }

    pub fn intercept(&self) -> f64 {
        self.linear().intercept
    }

    pub fn beta(&self) -> &[f64] {
        &self.linear().beta
    }
}

impl From<LinearFit> for Fit {
    fn from(f: LinearFit) -> Self {
        Fit::Linear(f)
    }
}

impl From<SacrFit> for Fit {
    fn from(f: SacrFit) -> Self {
        Fit::Sacr(f)
    }
}

/// Column-centered design and centered response.
pub(crate) struct Centered {
    pub a: DenseMatrix,
    pub y: Vec<f64>,
    pub a_means: Vec<f64>,
    pub y_mean: f64,
}

impl Centered {
    pub fn new(a: &DenseMatrix, y: &[f64]) -> Result<Self, FitError> {
        check_design(a, y)?;
        let a_means = a.column_means();
        let mut ac = a.clone();
        for i in 0..ac.rows() {
            for (v, m) in ac.row_mut(i).iter_mut().zip(&a_means) {
                *v -= m;
            }
        }
        let y_mean = crate::linalg::mean(y);
        Ok(Self {
            a: ac,
            y: y.iter().map(|v| v - y_mean).collect(),
            a_means,
            y_mean,
        })
    }

    pub fn intercept(&self, beta: &[f64]) -> f64 {
        self.y_mean - crate::linalg::dot(&self.a_means, beta)
    }
}

pub(crate) fn check_design(a: &DenseMatrix, y: &[f64]) -> Result<(), FitError> {
    if a.rows() != y.len() {
        return Err(FitError::Invalid(format!(
            "design has {} rows, response has {}",
            a.rows(),
            y.len()
        )));
    }
    if a.rows() == 0 || a.cols() == 0 {
        return Err(FitError::Invalid("empty design".into()));
    }
    if !a.all_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(FitError::Invalid("non-finite design or response".into()));
    }
    Ok(())
}

pub(crate) fn check_lambda(lambda: f64, allow_zero: bool) -> Result<(), FitError> {
    let ok = lambda.is_finite() && (lambda > 0.0 || (allow_zero && lambda == 0.0));
    if ok {
        Ok(())
    } else {
        Err(FitError::Invalid(format!("lambda must be {}, got {lambda}", if allow_zero { ">= 0" } else { "> 0" })))
    }
}

pub(crate) fn check_vector(name: &str, v: &[f64], len: usize) -> Result<(), FitError> {
    if v.len() != len {
        return Err(FitError::Invalid(format!("{name} has length {}, expected {len}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(FitError::Invalid(format!("{name} has non-finite entries")));
    }
    Ok(())
}

/// Seeded uniform(-1, 1) design and response for unit tests.
#[cfg(test)]
pub(crate) fn random_problem(n: usize, p: usize, seed: u64) -> (DenseMatrix, Vec<f64>) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let a = DenseMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0));
    let y = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    (a, y)
}
