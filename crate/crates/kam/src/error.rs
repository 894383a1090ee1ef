use thiserror::Error;

#[derive(Debug, Error)]
pub enum KamError {
    #[error("series budgets differ")]
    BudgetMismatch,

    #[error("exponent stored on tangential site {0}")]
    TangentialSite(i32),

    #[error("monomial {0} exceeds the truncation budget")]
    OutsideBudget(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("truncation budget too small: {0}")]
    BudgetTooSmall(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("gate violated: {gate} ({detail})")]
    Gate { gate: String, detail: String },

    #[error("small divisor {kind} at k={k:?}, n={n}, m={m}: |value| {value:.3e} below threshold {threshold:.3e}")]
    DivisorViolation {
        kind: String,
        k: Vec<i32>,
        n: i32,
        m: i32,
        value: f64,
        threshold: f64,
    },

    #[error("high-mode solve at n={n} does not contract (off-diagonal bound {bound:.3e})")]
    NeumannDivergence { n: i32, bound: f64 },

    #[error("Lie series does not contract: {0}")]
    LieNonContraction(String),

    #[error("Newton iteration failed at t={t}: residual {residual:.3e}")]
    NewtonFailure { t: f64, residual: f64 },

    #[error("decay fit failed: {0}")]
    DecayFit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = KamError> = std::result::Result<T, E>;
