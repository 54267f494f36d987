use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({x}, {y}) lies outside the parabolic strip of width {eps}")]
    OutsideStrip { x: f64, y: f64, eps: f64 },

    #[error("state ({x}, {y}, {z}) lies outside the domain")]
    OutsideDomain { x: f64, y: f64, z: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge: achieved {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("slope integral diverges: growth rate {rate} with strip width {eps}")]
    Divergent { rate: f64, eps: f64 },

    #[error("root bracketing failed on [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },

    #[error("payoff `{0}` is not supported here")]
    UnsupportedPayoff(String),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
