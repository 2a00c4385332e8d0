//! Penalized scalar-on-function regression.

pub mod linalg;
pub mod qp;
pub mod fda;
pub mod estimators;
pub mod selection;
