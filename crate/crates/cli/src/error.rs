//! CLI-level error carrying the process exit code.
//!
//! Exit codes are a stable contract: 0 success, 1 output/IO failure,
//! 2 input error (parsing, validation, shapes), 3 budget exceeded,
//! 4 feasibility/convergence failure.

use std::fmt;

use sensched_core::Error as CoreError;

#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub code: i32,
}

impl CliError {
    /// Scenario/flag problems: exit 2.
    pub fn input(message: String) -> Self {
        Self { message, code: 2 }
    }

    /// Output-side IO problems: exit 1.
    pub fn io(context: &str, e: std::io::Error) -> Self {
        Self {
            message: format!("{context}: {e}"),
            code: 1,
        }
    }

    /// Classifies a computation-phase library error: budget exhaustion maps
    /// to 3, feasibility/convergence/conditioning failures to 4, and
    /// remaining (structural) errors to 2.
    pub fn run(e: CoreError) -> Self {
        let code = match &e {
            CoreError::BudgetExceeded { .. }
            | CoreError::HorizonBudgetExceeded { .. }
            | CoreError::RecurrenceNotDetected { .. }
            | CoreError::ApproxGapExceeded { .. } => 3,
            CoreError::FeasibilityFailed { .. }
            | CoreError::NoConvergence { .. }
            | CoreError::NoFeasibleSchedule { .. }
            | CoreError::NonFiniteInput
            | CoreError::NotPositiveSemidefinite { .. }
            | CoreError::IllConditionedInnovation { .. }
            | CoreError::CycleClosure { .. }
            | CoreError::BetaNotTrajectoryBound { .. } => 4,
            _ => 2,
        };
        Self {
            message: e.to_string(),
            code,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CliError {}
