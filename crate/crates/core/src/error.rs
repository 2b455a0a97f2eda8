use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error("invalid law: {0}")]
    InvalidLaw(String),

    #[error("law has no finite second moment (power tail with exponent {alpha})")]
    InfiniteMoment { alpha: f64 },

    #[error("stable constant fit unstable: relative residual {residual:.4} exceeds {limit}")]
    FitUnstable { residual: f64, limit: f64 },

    #[error("law is degenerate: {0}")]
    Degenerate(String),

    #[error("atom {point:?} is not on the lattice (residual {residual:.3e})")]
    NotOnLattice { point: Vec<i64>, residual: f64 },

    #[error("grid step {grid_step} is coarser than rho/4 = {limit}")]
    GridTooCoarse { grid_step: f64, limit: f64 },

    #[error("exact engine needs about {states} cells, budget is {budget}")]
    BudgetExceeded { states: u128, budget: u128 },

    #[error("quadrature did not reach tolerance {tolerance:.1e} (estimate {estimate:.1e}) within {panels} panels")]
    QuadratureBudget {
        tolerance: f64,
        estimate: f64,
        panels: usize,
    },

    #[error("too few runs: {runs} < {required}")]
    TooFewRuns { runs: usize, required: usize },

    #[error("no cell reached {required} hits")]
    TooFewSamples { required: u64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
