//! Command errors, their exit codes and their machine-readable form.

use kg_core::diophantine::DiophantineError;
use kg_core::ls_solver::SolveError;
use kg_core::verify::VerifyError;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Frequency(#[from] DiophantineError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("relative residual {residual:e} exceeds the tolerance {tol:e}")]
    ResidualAboveTolerance { residual: f64, tol: f64 },
    #[error("hard checks failed: {0}")]
    ChecksFailed(String),
    #[error("output error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Machine-readable error record printed on failure.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub reason: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    /// `1` configuration, `2` solver non-convergence, `3` failed checks, `4` output.
    pub fn exit_code(&self) -> i32 {
        match self.reason() {
            "diverged" | "stalled" => 2,
            "residual above tolerance" | "check failed" => 3,
            "output error" => 4,
            _ => 1,
        }
    }

    /// Short stable classification of the error.
    pub fn reason(&self) -> &'static str {
        match self {
            CliError::Config(_) => "invalid config",
            CliError::Solve(e) | CliError::Verify(VerifyError::Solve(e)) => solve_reason(e),
            CliError::Frequency(DiophantineError::EmptyGrid { .. }) => "frequency rejected",
            CliError::Frequency(_) => "invalid config",
            CliError::Verify(VerifyError::StepTooLarge { .. }) | CliError::Verify(VerifyError::InvalidInput(_)) => {
                "invalid config"
            }
            CliError::Verify(VerifyError::Field(_)) => "invalid discretization",
            CliError::ResidualAboveTolerance { .. } => "residual above tolerance",
            CliError::ChecksFailed(_) => "check failed",
            CliError::Io(_) => "output error",
        }
    }

    pub fn record(&self) -> ErrorRecord {
        ErrorRecord {
            reason: self.reason(),
            message: self.to_string(),
            exit_code: self.exit_code(),
        }
    }
}

fn solve_reason(e: &SolveError) -> &'static str {
    match e {
        SolveError::UnsupportedExponent(_) => "unsupported exponent",
        SolveError::UnsupportedBasis { .. } => "unsupported basis",
        SolveError::FrequencyRejected { .. } => "frequency rejected",
        SolveError::InvalidParameter(_) => "invalid config",
        SolveError::EmptySubspace(_) => "empty subspace",
        SolveError::Diverged { .. } => "diverged",
        SolveError::Stalled { .. } => "stalled",
        SolveError::Field(_) => "invalid discretization",
    }
}
