use thiserror::Error;

/// Errors shared across the estimation and simulation modules.
#[derive(Debug, Error)]
pub enum Error {
    /// Incompatible dimensions or a degenerate problem size (for example
    /// n <= d + K, where the corrected variance is undefined).
    #[error("dimension error: {0}")]
    Dimension(String),

    /// The design matrix has numerical rank below its column count at the
    /// requested tolerance. `dropped` holds original column indices that a
    /// permissive factorization would discard.
    #[error("rank deficient: detected rank {rank} of {cols} columns (dropped {dropped:?})")]
    RankDeficient {
        rank: usize,
        cols: usize,
        dropped: Vec<usize>,
    },

    /// Gamma_hat = (MX)'(MX)/n is singular or not positive definite, which
    /// signals that X is numerically explained by the basis columns.
    #[error("gamma matrix is singular: regressors are explained by the basis")]
    SingularGamma,

    /// The pairwise JIVE2 system matrix is singular.
    #[error("singular design: the leave-out bilinear system is not invertible")]
    SingularDesign,

    /// The discrete Hoeffding decomposition only enumerates small supports.
    #[error("support too large: {0} states exceeds the enumeration limit of {1}")]
    SupportTooLarge(usize, usize),

    /// A decomposition oracle (smoothed density, smoothed mean) cannot be
    /// evaluated for the requested combination of inputs.
    #[error("oracle unavailable: {0}")]
    OracleUnavailable(String),

    /// Mixture standardization was asked to produce a nonpositive variance.
    #[error("nonpositive variance: {0}")]
    NonpositiveVariance(String),

    /// Invalid run configuration (bad model id, empty ladder, and so on).
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
