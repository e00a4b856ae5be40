use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("spline order must be between 1 and {max}, got {m}")]
    InvalidOrder { m: u32, max: u32 },

    #[error("derivative of order {k} of Q_{m} is not continuous (need k <= m - 2)")]
    DerivativeOrder { m: u32, k: u32 },

    #[error("Fourier derivatives of order {0} are not supported (max 3)")]
    UnsupportedFourierDerivative(u32),

    #[error("invalid configuration: {0}")]
    InvalidKappa(String),

    #[error("configuration {0} does not give a complete interpolation set")]
    NotCis(String),

    #[error("circle certificate for {0} is inconclusive")]
    Inconclusive(String),

    #[error("table polynomial for m={m}, a={a} is not an integer polynomial: {detail}")]
    TableRemainder { m: u32, a: String, detail: String },

    #[error("inverse symbol coefficients did not converge: {0}")]
    KernelConvergence(String),

    #[error("kernel coefficients have imaginary part {0:e}, expected real")]
    ComplexKernel(f64),

    #[error("signal `{signal}` has no derivative of order {order} at t = {t}; choose a dilation whose nodes avoid it (e.g. W = N*sqrt(7))")]
    UndefinedPoint { signal: String, order: usize, t: f64 },

    #[error("signal `{signal}` provides derivatives up to order {max}, requested {order}")]
    MissingDerivative { signal: String, order: usize, max: usize },

    #[error("samples cover l in [{have_lo}, {have_hi}] but evaluation needs [{need_lo}, {need_hi}]")]
    InsufficientSamples { need_lo: i64, need_hi: i64, have_lo: i64, have_hi: i64 },

    #[error("order fit needs at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },

    #[error("order fit needs positive values, got {0}")]
    NonPositive(f64),

    #[error("parse error: {0}")]
    Parse(String),
}
