use thiserror::Error;

/// Errors raised by the analytic layer, the simulator and the front end.
#[derive(Debug, Error)]
pub enum DamError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid cost specification: {0}")]
    InvalidCost(String),

    #[error("root finding did not converge: {0}")]
    Convergence(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// The expected cycle length is infinite, so no long-run average exists.
    #[error("infinite mean cycle length: {0}")]
    InfiniteMean(String),

    /// `E_tau[exp(-alpha T*_0)]` is numerically 1, the geometric sum in the
    /// total discounted cost diverges.
    #[error("discounted cost diverges: {0}")]
    Divergence(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DamError>;

impl Clone for DamError {
    fn clone(&self) -> Self {
        use DamError::*;
        match self {
            Domain(m) => Domain(m.clone()),
            InvalidModel(m) => InvalidModel(m.clone()),
            InvalidPolicy(m) => InvalidPolicy(m.clone()),
            InvalidCost(m) => InvalidCost(m.clone()),
            Convergence(m) => Convergence(m.clone()),
            Unsupported(m) => Unsupported(m.clone()),
            InfiniteMean(m) => InfiniteMean(m.clone()),
            Divergence(m) => Divergence(m.clone()),
            InsufficientData(m) => InsufficientData(m.clone()),
            Numerical(m) => Numerical(m.clone()),
            Config(m) => Config(m.clone()),
            Io(e) => Io(std::io::Error::new(e.kind(), e.to_string())),
        }
    }
}
