//! CLI failures and their exit codes.

use entropy_lab::boundary::BoundaryError;
use entropy_lab::divergence::DivergenceError;
use entropy_lab::experiments::ExperimentError;
use entropy_lab::green::GreenError;
use entropy_lab::group::GroupError;
use entropy_lab::measure::MeasureError;
use entropy_lab::tmap::TMapError;
use thiserror::Error;

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => EXIT_VALIDATION,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

fn numeric(e: impl ToString) -> CliError {
    CliError::Numeric(e.to_string())
}

fn validation(e: impl ToString) -> CliError {
    CliError::Validation(e.to_string())
}

impl From<DivergenceError> for CliError {
    fn from(e: DivergenceError) -> Self {
        validation(e)
    }
}

impl From<GroupError> for CliError {
    fn from(e: GroupError) -> Self {
        validation(e)
    }
}

impl From<MeasureError> for CliError {
    fn from(e: MeasureError) -> Self {
        match e {
            MeasureError::SupportCapExceeded { .. } => numeric(e),
            _ => validation(e),
        }
    }
}

impl From<BoundaryError> for CliError {
    fn from(e: BoundaryError) -> Self {
        match e {
            BoundaryError::ToleranceNotReached { .. } => numeric(e),
            BoundaryError::Measure(inner) => inner.into(),
            _ => validation(e),
        }
    }
}

impl From<TMapError> for CliError {
    fn from(e: TMapError) -> Self {
        match e {
            TMapError::NotRealizable(_) | TMapError::NoConvergence { .. } => numeric(e),
            TMapError::Boundary(inner) => inner.into(),
            TMapError::Measure(inner) => inner.into(),
            _ => validation(e),
        }
    }
}

impl From<GreenError> for CliError {
    fn from(e: GreenError) -> Self {
        match e {
            GreenError::NoConvergence(_) | GreenError::Singular | GreenError::Infeasible(_) => {
                numeric(e)
            }
            GreenError::Boundary(inner) => inner.into(),
            GreenError::TMap(inner) => inner.into(),
            GreenError::Measure(inner) => inner.into(),
            _ => validation(e),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Boundary(inner) => inner.into(),
            ExperimentError::TMap(inner) => inner.into(),
            ExperimentError::Invalid(_) => validation(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification() {
        let e: CliError = TMapError::NoConvergence { residual: 1.0, tol: 1e-12 }.into();
        assert_eq!(e.exit_code(), EXIT_NUMERIC);
        let e: CliError = GreenError::InvalidA(1.0).into();
        assert_eq!(e.exit_code(), EXIT_VALIDATION);
        let e: CliError = GreenError::TMap(TMapError::NotRealizable("x".into())).into();
        assert_eq!(e.exit_code(), EXIT_NUMERIC);
        let e: CliError = BoundaryError::NoSignChange.into();
        assert_eq!(e.exit_code(), EXIT_VALIDATION);
    }
}
