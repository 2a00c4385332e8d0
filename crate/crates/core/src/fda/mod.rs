//! Functional data on an equispaced grid over `[0, 1]`.

mod bspline;
mod dataset;
mod simulate;

pub use bspline::{bspline_basis, clamped_knots};
pub use dataset::{
    design_matrix, load_csv, read_csv, standardize, ColumnSelector, CsvOptions, DataError,
    FunctionalDataset, StandardizationParams, Task,
};
pub use simulate::{default_true_beta, simulate, CoefficientCovariance, SimulationConfig};
