use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::DenseMatrix;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}, column {col}: cannot parse `{value}` as a number")]
    Parse { row: usize, col: usize, value: String },
    #[error("row {row} has {found} columns, expected {expected}")]
    RaggedRows { row: usize, expected: usize, found: usize },
    #[error("rows with missing values: {rows:?}")]
    MissingValues { rows: Vec<usize> },
    #[error("label mode needs exactly two distinct response values, found {found:?}")]
    NonBinaryLabels { found: Vec<f64> },
    #[error("unknown response column `{0}`")]
    UnknownColumn(String),
    #[error("grid length mismatch: expected {expected}, found {found}")]
    GridMismatch { expected: usize, found: usize },
    #[error("t = {t} outside knot range [{lo}, {hi}]")]
    OutsideKnotRange { t: f64, lo: f64, hi: f64 },
    #[error("invalid data: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Regression,
    Classification,
}

/// `N` curves sampled on the grid `t_j = j/p`, `j = 1..p`, with responses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalDataset {
    grid: Vec<f64>,
    curves: DenseMatrix,
    response: Vec<f64>,
    task: Task,
    /// Raw response values mapped to 0 and 1 (classification only).
    label_levels: Option<[f64; 2]>,
}

impl FunctionalDataset {
    pub fn new(curves: DenseMatrix, response: Vec<f64>, task: Task) -> Result<Self, DataError> {
        if curves.rows() != response.len() {
            return Err(DataError::Invalid(format!(
                "{} curves but {} responses",
                curves.rows(),
                response.len()
            )));
        }
        if curves.cols() == 0 {
            return Err(DataError::Invalid("curves have no grid points".into()));
        }
        if !curves.all_finite() || response.iter().any(|v| !v.is_finite()) {
            return Err(DataError::Invalid("non-finite value".into()));
        }
        if task == Task::Classification && response.iter().any(|v| *v != 0.0 && *v != 1.0) {
            return Err(DataError::Invalid("classification labels must be 0 or 1".into()));
        }
        let p = curves.cols();
        Ok(Self {
            grid: equispaced_grid(p),
            curves,
            response,
            task,
            label_levels: None,
        })
    }

    /// Curves without responses, for prediction.
    pub fn curves_only(curves: DenseMatrix) -> Result<Self, DataError> {
        if curves.cols() == 0 || !curves.all_finite() {
            return Err(DataError::Invalid("curves must be finite and nonempty".into()));
        }
        let p = curves.cols();
        Ok(Self {
            grid: equispaced_grid(p),
            curves,
            response: Vec::new(),
            task: Task::Regression,
            label_levels: None,
        })
    }

    pub fn with_label_levels(mut self, levels: [f64; 2]) -> Self {
        self.label_levels = Some(levels);
        self
    }

    pub fn n(&self) -> usize {
        self.curves.rows()
    }

    pub fn p(&self) -> usize {
        self.curves.cols()
    }

    /// Grid spacing `Δt = 1/p`.
    pub fn delta(&self) -> f64 {
        1.0 / self.p() as f64
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn curves(&self) -> &DenseMatrix {
        &self.curves
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn has_response(&self) -> bool {
        self.response.len() == self.n() && self.n() > 0
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn label_levels(&self) -> Option<[f64; 2]> {
        self.label_levels
    }

    /// Rows `idx`, in order.
    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            grid: self.grid.clone(),
            curves: self.curves.select_rows(idx),
            response: if self.response.is_empty() {
                Vec::new()
            } else {
                idx.iter().map(|&i| self.response[i]).collect()
            },
            task: self.task,
            label_levels: self.label_levels,
        }
    }

    pub fn with_curves(&self, curves: DenseMatrix) -> Self {
        assert_eq!(curves.rows(), self.n());
        Self {
            grid: equispaced_grid(curves.cols()),
            curves,
            ..self.clone()
        }
    }

    pub fn with_response(&self, response: Vec<f64>) -> Self {
        assert_eq!(response.len(), self.n());
        Self {
            response,
            ..self.clone()
        }
    }
}

fn equispaced_grid(p: usize) -> Vec<f64> {
    (1..=p).map(|j| j as f64 / p as f64).collect()
}

/// Which CSV column holds the response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelector {
    Name(String),
    /// 0-based column index.
    Index(usize),
    Last,
}

impl std::str::FromStr for ColumnSelector {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "last" => ColumnSelector::Last,
            _ => match s.parse::<usize>() {
                Ok(i) => ColumnSelector::Index(i),
                Err(_) => ColumnSelector::Name(s.to_string()),
            },
        })
    }
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub has_header: bool,
    /// `None` reads every column as a curve value.
    pub response: Option<ColumnSelector>,
    /// Map the two distinct response values to `{0, 1}` in sorted order.
    pub label_mode: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            has_header: true,
            response: Some(ColumnSelector::Last),
            label_mode: false,
        }
    }
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "na" | "NaN" | "nan" | "?")
}

pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<FunctionalDataset, DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file, options)
}

/// Parses comma-separated curves. Reported rows and columns are 1-based
/// and count the header line when present.
pub fn read_csv<R: Read>(reader: R, options: &CsvOptions) -> Result<FunctionalDataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(options.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Option<Vec<String>> = if options.has_header {
        Some(rdr.headers()?.iter().map(str::to_string).collect())
    } else {
        None
    };
    let row_offset = usize::from(options.has_header);

    let mut width = header.as_ref().map(Vec::len);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut missing = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let record = record?;
        let row_no = k + 1 + row_offset;
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(DataError::RaggedRows {
                row: row_no,
                expected,
                found: record.len(),
            });
        }
        let mut vals = Vec::with_capacity(record.len());
        let mut row_missing = false;
        for (c, cell) in record.iter().enumerate() {
            if is_missing(cell) {
                row_missing = true;
                vals.push(f64::NAN);
                continue;
            }
            let v = cell.parse::<f64>().map_err(|_| DataError::Parse {
                row: row_no,
                col: c + 1,
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                row_missing = true;
            }
            vals.push(v);
        }
        if row_missing {
            missing.push(row_no);
        }
        rows.push(vals);
    }
    if !missing.is_empty() {
        return Err(DataError::MissingValues { rows: missing });
    }
    let width = width.unwrap_or(0);
    if rows.is_empty() {
        return Err(DataError::Invalid("no data rows".into()));
    }

    let response_col = match &options.response {
        None => None,
        Some(ColumnSelector::Last) => Some(width.checked_sub(1).ok_or_else(|| {
            DataError::Invalid("no columns".into())
        })?),
        Some(ColumnSelector::Index(i)) if *i < width => Some(*i),
        Some(ColumnSelector::Index(i)) => return Err(DataError::UnknownColumn(i.to_string())),
        Some(ColumnSelector::Name(name)) => Some(
            header
                .as_ref()
                .and_then(|h| h.iter().position(|c| c == name))
                .ok_or_else(|| DataError::UnknownColumn(name.clone()))?,
        ),
    };
    let curve_cols: Vec<usize> = (0..width).filter(|c| Some(*c) != response_col).collect();
    if curve_cols.is_empty() {
        return Err(DataError::Invalid("no curve columns".into()));
    }
    let mut data = Vec::with_capacity(rows.len() * curve_cols.len());
    for r in &rows {
        data.extend(curve_cols.iter().map(|&c| r[c]));
    }
    let curves = DenseMatrix::from_vec(rows.len(), curve_cols.len(), data)
        .map_err(|e| DataError::Invalid(e.to_string()))?;

    let Some(rc) = response_col else {
        return FunctionalDataset::curves_only(curves);
    };
    let raw: Vec<f64> = rows.iter().map(|r| r[rc]).collect();
    if options.label_mode {
        let mut levels = raw.clone();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        if levels.len() != 2 {
            return Err(DataError::NonBinaryLabels { found: levels });
        }
        let labels = raw.iter().map(|v| if *v == levels[0] { 0.0 } else { 1.0 }).collect();
        Ok(FunctionalDataset::new(curves, labels, Task::Classification)?
            .with_label_levels([levels[0], levels[1]]))
    } else {
        FunctionalDataset::new(curves, raw, Task::Regression)
    }
}

/// Per-column centering and scaling learned from a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    /// Columns with zero sample variance; their scale is 1.
    pub constant_columns: Vec<usize>,
    /// Subtracted from the response for regression, 0 for classification.
    pub response_mean: f64,
}

impl StandardizationParams {
    pub fn apply_curves(&self, curves: &DenseMatrix) -> Result<DenseMatrix, DataError> {
        if curves.cols() != self.means.len() {
            return Err(DataError::GridMismatch {
                expected: self.means.len(),
                found: curves.cols(),
            });
        }
        let mut out = curves.clone();
        for i in 0..out.rows() {
            for ((v, m), s) in out.row_mut(i).iter_mut().zip(&self.means).zip(&self.scales) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }

    pub fn restore_curves(&self, standardized: &DenseMatrix) -> DenseMatrix {
        let mut out = standardized.clone();
        for i in 0..out.rows() {
            for ((v, m), s) in out.row_mut(i).iter_mut().zip(&self.means).zip(&self.scales) {
                *v = *v * s + m;
            }
        }
        out
    }

    /// Applies the curve transform and centers the response.
    pub fn apply(&self, dataset: &FunctionalDataset) -> Result<FunctionalDataset, DataError> {
        let curves = self.apply_curves(dataset.curves())?;
        let out = dataset.with_curves(curves);
        if dataset.has_response() && dataset.task() == Task::Regression {
            let centered = dataset.response().iter().map(|y| y - self.response_mean).collect();
            Ok(out.with_response(centered))
        } else {
            Ok(out)
        }
    }
}

/// Centers and scales each curve column to unit sample standard deviation
/// and centers a regression response.
pub fn standardize(
    dataset: &FunctionalDataset,
) -> Result<(FunctionalDataset, StandardizationParams), DataError> {
    let n = dataset.n();
    if n < 2 {
        return Err(DataError::Invalid(format!("standardization needs N >= 2, got {n}")));
    }
    let curves = dataset.curves();
    let means = curves.column_means();
    let mut ss = vec![0.0; dataset.p()];
    for i in 0..n {
        for (j, v) in curves.row(i).iter().enumerate() {
            ss[j] += (v - means[j]).powi(2);
        }
    }
    let mut constant_columns = Vec::new();
    let scales: Vec<f64> = ss
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let sd = (s / (n - 1) as f64).sqrt();
            if sd > 0.0 && sd > 1e-14 * means[j].abs() {
                sd
            } else {
                constant_columns.push(j);
                1.0
            }
        })
        .collect();
    let response_mean = if dataset.has_response() && dataset.task() == Task::Regression {
        crate::linalg::mean(dataset.response())
    } else {
        0.0
    };
    let params = StandardizationParams {
        means,
        scales,
        constant_columns,
        response_mean,
    };
    let out = params.apply(dataset)?;
    Ok((out, params))
}

/// `A_ij = x_i(t_j)·Δt`, so that `A·β` is the right-Riemann sum of `∫ x_i β`.
pub fn design_matrix(dataset: &FunctionalDataset) -> DenseMatrix {
    dataset.curves().scale(dataset.delta())
}
