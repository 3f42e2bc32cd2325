use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A state, channel, or circuit parameter is outside its declared range.
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    /// A grid or sweep was requested over a degenerate range.
    #[error("degenerate range: {0}")]
    DegenerateRange(String),

    /// A tabulated density could not be normalized.
    #[error("non-normalizable density: total mass {0}")]
    NonNormalizable(f64),

    /// An invalid domain partition (unsorted boundaries, non-positive period,
    /// or a partition kind unsuitable for the requested operation).
    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    /// Numerical failure (quadrature non-convergence, NaN, ...).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Reference to a mode id the engine does not know.
    #[error("unknown mode {0}")]
    UnknownMode(u32),

    /// A measured mode was addressed again.
    #[error("mode {0} already consumed by measurement")]
    ConsumedMode(u32),

    /// A noise symbol has no variance binding.
    #[error("unbound noise symbol {0}")]
    UnboundSymbol(String),

    /// Binned feedforward applied to an expression whose signal coefficients
    /// are not integers after rescaling: signals would mix across the lattice.
    #[error("unbalanced circuit: coefficient {coeff} on {symbol} is not an integer after rescaling")]
    UnbalancedCircuit { symbol: String, coeff: f64 },

    /// Grid spacing too coarse to resolve a convolution kernel.
    #[error("grid too coarse: spacing {spacing} exceeds kernel sigma/4 = {limit}")]
    GridTooCoarse { spacing: f64, limit: f64 },

    /// A Monte Carlo outcome was compared against a report built from
    /// different circuit parameters.
    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
