use std::fmt;
use std::process::ExitCode;

use sacr_core::estimators::FitError;
use sacr_core::fda::DataError;
use sacr_core::selection::SelectionError;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERICAL,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        Self::data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::data(e.to_string())
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        let code = match &e {
            FitError::Invalid(_) => EXIT_USAGE,
            FitError::Data(_)
            | FitError::GridMismatch { .. }
            | FitError::BothClassesRequired
            | FitError::MissingStandardization => EXIT_DATA,
            FitError::Linalg(_) | FitError::Solver { .. } | FitError::AllWeightsInfinite => EXIT_NUMERICAL,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<SelectionError> for CliError {
    fn from(e: SelectionError) -> Self {
        match e {
            SelectionError::Fit(f) => f.into(),
            SelectionError::Data(d) => d.into(),
            SelectionError::InvalidGrid(_) => Self::usage(e.to_string()),
            SelectionError::NoViablePoint(_) => Self::numerical(e.to_string()),
            SelectionError::KTooLarge { .. }
            | SelectionError::KTooSmall(_)
            | SelectionError::LengthMismatch { .. }
            | SelectionError::Empty => Self::data(e.to_string()),
        }
    }
}
