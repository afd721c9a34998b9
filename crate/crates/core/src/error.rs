use thiserror::Error;

/// Errors surfaced by the optimization core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("rejected input: {0}")]
    RejectedInput(String),

    #[error("utility overflow at lambda = {lambda}: lambda^{exponent} exceeds the float range; use the normalized utility instead")]
    Overflow { lambda: f64, exponent: usize },

    #[error("dominance ratio undefined: all rules satisfied at the query point")]
    UndefinedRatio,

    #[error("solver diverged: non-finite objective after {steps} steps")]
    Diverged { steps: usize },

    #[error("preemptive stage {stage} diverged")]
    StageDiverged { stage: usize },

    #[error("grid budget exceeded: {requested} points > {budget}")]
    GridBudgetExceeded { requested: usize, budget: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
