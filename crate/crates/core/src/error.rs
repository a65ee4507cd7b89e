use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZrpError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("alpha = {alpha} is outside the theorem range alpha >= 1")]
    OutOfScope { alpha: f64 },

    #[error("density diverges at fugacity 1 for alpha = {alpha} (finite only for alpha > 2)")]
    DivergentDensity { alpha: f64 },

    #[error("schedule infeasible at L = {l}: requires N = {required_n} ({reason})")]
    Infeasible { l: u64, required_n: u64, reason: String },

    #[error("index {index} outside the admissible range [{lo}, {hi}]")]
    Range { index: i64, lo: i64, hi: i64 },

    #[error("absorbing state: total jump rate is zero")]
    Absorbing,

    #[error("state space of size {size} exceeds the enumeration cap {cap}")]
    StateSpaceTooLarge { size: u128, cap: u128 },

    #[error("numeric invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, ZrpError>;
