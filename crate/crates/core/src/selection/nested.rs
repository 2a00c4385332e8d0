use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::grid::{grid_search, GridPointSummary, HyperGrid};
use super::pipeline::{metric_for, score, train, EstimatorSpec};
use super::{complement, derive_seed, kfold_split, mean_sd, Metric, SelectionError};
use crate::estimators::{Estimator, Hyperparams};
use crate::fda::{FunctionalDataset, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NestedConfig {
    pub k_outer: usize,
    pub k_inner: usize,
    pub repeats: usize,
    pub seed: u64,
    /// Stratify folds by class; ignored for regression.
    pub stratify: bool,
}

impl Default for NestedConfig {
    fn default() -> Self {
        Self {
            k_outer: 5,
            k_inner: 3,
            repeats: 3,
            seed: 0,
            stratify: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterFoldResult {
    pub repeat: usize,
    pub fold: usize,
    /// Row indices of the outer test fold.
    pub test_indices: Vec<usize>,
    pub selected: Hyperparams,
    pub test_metric: f64,
    pub inner: Vec<GridPointSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub estimator: Estimator,
    pub metric: Metric,
    pub protocol: String,
    pub config: NestedConfig,
    pub outer_folds: Vec<OuterFoldResult>,
    /// Across every outer fold of every repeat.
    pub mean: f64,
    pub sd: f64,
}

impl CvReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `mean ± sd` cell in the layout of the published tables.
    pub fn summary(&self) -> String {
        let decimals = decimals_for(self.mean);
        format!("{} ± {}", table_number(self.mean, decimals), table_number(self.sd, decimals))
    }
}

fn number_word(n: usize) -> String {
    const WORDS: [&str; 11] = [
        "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    ];
    WORDS.get(n).map_or_else(|| n.to_string(), |w| w.to_string())
}

/// Plain-language description of the evaluation protocol.
pub fn protocol_description(config: &NestedConfig) -> String {
    let reps = if config.repeats == 1 {
        "one random repetition".to_string()
    } else {
        format!("{} random repetitions", number_word(config.repeats))
    };
    format!(
        "{reps} of {}-fold cross-validation, with {}-fold cross-validation for grid search",
        config.k_outer, config.k_inner
    )
}

/// Outer `k_outer`-fold evaluation with an inner grid search on each
/// outer training set, repeated with independent fold assignments.
pub fn nested_evaluate(
    spec: &EstimatorSpec,
    data: &FunctionalDataset,
    grid: &HyperGrid,
    config: &NestedConfig,
) -> Result<CvReport, SelectionError> {
    if config.repeats == 0 {
        return Err(SelectionError::InvalidGrid("repeats must be at least 1".into()));
    }
    grid.points(spec.estimator)?;
    let stratify = config.stratify && data.task() == Task::Classification;
    let mut outer_folds = Vec::new();
    for r in 0..config.repeats {
        let seed_r = derive_seed(config.seed, r as u64);
        let labels = stratify.then(|| data.response());
        let folds = kfold_split(data.n(), config.k_outer, seed_r, labels)?;
        for (f, test_idx) in folds.iter().enumerate() {
            let fold_seed = derive_seed(seed_r, f as u64 + 1);
            let outer_train = data.subset(&complement(&folds, f));
            let test = data.subset(test_idx);
            let gs = grid_search(spec, &outer_train, grid, config.k_inner, fold_seed, stratify)?;
            let model = train(spec, &outer_train, &gs.selected, fold_seed)?;
            let test_metric = score(&model, &test)?;
            outer_folds.push(OuterFoldResult {
                repeat: r,
                fold: f,
                test_indices: test_idx.clone(),
                selected: gs.selected,
                test_metric,
                inner: gs.points,
            });
        }
    }
    let values: Vec<f64> = outer_folds.iter().map(|o| o.test_metric).collect();
    let (mean, sd) = mean_sd(&values);
    Ok(CvReport {
        estimator: spec.estimator,
        metric: metric_for(data.task()),
        protocol: protocol_description(config),
        config: *config,
        outer_folds,
        mean,
        sd,
    })
}

/// Decimals that give four significant digits for `x`.
fn decimals_for(x: f64) -> usize {
    if x == 0.0 || !x.is_finite() {
        return 3;
    }
    (3 - x.abs().log10().floor() as i64).max(0) as usize
}

/// Fixed-point with the leading zero dropped, as in `.0691`.
fn table_number(x: f64, decimals: usize) -> String {
    let s = format!("{x:.decimals$}");
    if let Some(rest) = s.strip_prefix("0.") {
        format!(".{rest}")
    } else if let Some(rest) = s.strip_prefix("-0.") {
        format!("-.{rest}")
    } else {
        s
    }
}

pub fn table_label(estimator: Estimator) -> &'static str {
    match estimator {
        Estimator::Ridge => "ridge",
        Estimator::CenteredRidge => "centered ridge",
        Estimator::Roughness => "roughness",
        Estimator::Sacr => "SACR",
        Estimator::SacrLogistic => "SACR (logistic)",
        Estimator::Lasso => "lasso",
        Estimator::AdaptiveLasso => "adaptive lasso",
        Estimator::RelaxedLasso => "relaxed lasso",
        Estimator::Nng => "NNG",
        Estimator::Bar => "BAR",
        Estimator::LogisticRidge => "logistic ridge",
    }
}

/// Comparison table: a caption line naming the metric and protocol, then
/// one `label  mean ± sd` row per report.
pub fn format_table(reports: &[CvReport]) -> String {
    let mut out = String::new();
    let Some(first) = reports.first() else {
        return out;
    };
    let _ = writeln!(out, "{} ({})", first.metric.caption(), first.protocol);
    let width = reports
        .iter()
        .map(|r| table_label(r.estimator).chars().count())
        .max()
        .unwrap_or(0);
    for r in reports {
        let _ = writeln!(out, "{:<width$}  {}", table_label(r.estimator), r.summary());
    }
    out
}
