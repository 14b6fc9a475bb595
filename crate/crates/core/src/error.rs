use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The star law puts all of its mass on 1, so `P(X* >= 2) > 0` fails.
    #[error("degenerate star law: P(X* >= 2) > 0 required")]
    DegenerateStarLaw,

    #[error("invalid star law: {0}")]
    InvalidStarLaw(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("truncation too aggressive: hard support cap removed {removed:e} of mass")]
    TruncationTooAggressive { removed: f64 },

    #[error("truncation defect {defect:e} exceeds the mass at zero {zero_mass:e}")]
    DefectExceedsZeroAtom { defect: f64, zero_mass: f64 },

    #[error("trace exhausted: non-positive mean at generation {index}")]
    TraceExhausted { index: usize },

    #[error(
        "node budget exceeded: a depth-{depth} tree has {leaves} leaves, budget is {budget}; \
         use the exact open-path transform instead"
    )]
    NodeBudgetExceeded {
        depth: u32,
        leaves: u128,
        budget: u64,
    },

    #[error("inequality violated: {0}")]
    InequalityViolated(String),
}
