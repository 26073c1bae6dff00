use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{a} is not invertible modulo {q}")]
    NotInvertible { a: i64, q: u64 },

    #[error("prime table up to {limit} cannot factor {n}")]
    InsufficientTable { n: u64, limit: u64 },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("budget exceeded: {needed} iterations requested, limit {limit}")]
    Budget { needed: u128, limit: u128 },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Non-fatal range conditions attached to estimates and reports.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub enum Warning {
    /// `y` below `exp((log log x)^{5/3})`, where `x rho(u)` is not known to be accurate.
    HildebrandRange,
    /// `y` outside `[(log x)^4, x]`.
    EulerProductRange,
    /// `q` has prime factors above `y`; the product only runs over `p <= y`.
    ModulusNotSmooth,
    /// `M`, `N` outside the Type II window `q/R^{1-delta} <= N <= R^{12/11-delta}`.
    TypeTwoRange,
    /// `M N` outside `[X/4, 4X]`.
    ProductRange,
    /// `eta >= delta/20`.
    EtaTooLarge,
    /// Empty smooth set; the ratio is undefined.
    EmptyMainTerm,
}
