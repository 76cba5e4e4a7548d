//! Error type shared across the crate.

/// Errors reported by constructors and operations.
///
/// Validation happens at construction time; operations on already-validated
/// values only fail for the reasons listed on each operation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian: residual {residual:.3e} exceeds {tol:.3e}")]
    NotHermitian { residual: f64, tol: f64 },

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("trace is {trace:.12} but must be 1 within {tol:.1e}")]
    NotUnitTrace { trace: f64, tol: f64 },

    #[error("effect exceeds the identity: min eigenvalue of I - E is {min_eigenvalue:.3e}")]
    EffectExceedsIdentity { min_eigenvalue: f64 },

    #[error("effects do not sum to the identity: max entry residual {residual:.3e}")]
    IncompleteEffects { residual: f64 },

    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),

    #[error("outcome index {index} out of range for {n_outcomes} outcomes")]
    OutcomeOutOfRange { index: usize, n_outcomes: usize },

    #[error(
        "outcome {outcome} has probability {probability:.3e}, below the conditioning floor {floor:.1e}"
    )]
    ZeroProbabilityOutcome {
        outcome: usize,
        probability: f64,
        floor: f64,
    },

    #[error("map is not completely positive: Choi min eigenvalue {min_eigenvalue:.3e}")]
    NotCompletelyPositive { min_eigenvalue: f64 },

    #[error("operator is not unitary: residual {residual:.3e}")]
    NotUnitary { residual: f64 },

    #[error("remixing matrix is not an isometry: residual {residual:.3e}")]
    NotIsometry { residual: f64 },

    #[error("operators are not a Kraus decomposition of the identity: residual {residual:.3e}")]
    NotIdentityDecomposition { residual: f64 },

    #[error("two computation routes disagree by {difference:.3e}; this indicates a bug")]
    InternalDisagreement { difference: f64 },

    #[error("judgment is state-dependent; a single dynamics map requires state independence")]
    StateDependentJudgment,

    #[error("conditioning event has probability {probability:.3e}, too small to condition on")]
    ZeroConditioningEvent { probability: f64 },

    #[error("jump conditioned on a dark state: click weight {probability:.3e} below floor")]
    DarkStateJump { probability: f64 },

    #[error("time step too large at t = {t}: click probability {dp:.3e} exceeds {limit}")]
    StepTooLarge { t: f64, dp: f64, limit: f64 },

    #[error("iteration did not converge after {iterations} steps: residual {residual:.3e}")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("parameter {name} = {value} outside [{min}, {max}]")]
    ParamOutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("invalid price book: {0}")]
    InvalidPriceBook(String),
}

pub type Result<T> = std::result::Result<T, Error>;
