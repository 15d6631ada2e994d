use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix has non-finite entries")]
    NotFinite,

    #[error("invalid tolerance {0}")]
    InvalidTolerance(f64),

    #[error("matrix is not Hermitian, residual {residual:.3e}")]
    NotHermitian { residual: f64 },

    #[error("matrix is not positive semidefinite, eigenvalue {min_eigenvalue:.3e}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("decomposition did not converge on a {rows}x{cols} matrix")]
    DecompositionFailed { rows: usize, cols: usize },

    #[error("effects do not sum to the identity, residual {residual:.3e}")]
    NotNormalized { residual: f64 },

    #[error("not a density matrix: {reason}")]
    InvalidState { reason: String },

    #[error("not a valid channel: Kraus operators sum to {residual:.3e} from the identity")]
    NotTracePreserving { residual: f64 },

    #[error("effect sum is not of the form I \u{2297} sigma, residual {residual:.3e}")]
    NotProductNormalized { residual: f64 },

    #[error("rank mismatch in {context}: expected {expected}, found {found}")]
    RankMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("operation requires a pure-input representation")]
    PureInputRequired,

    #[error("representation is not minimal: input map has rank {rank}, ancilla dimension {dh0}")]
    NotMinimal { rank: usize, dh0: usize },

    #[error("representations are not equivalent")]
    NotEquivalent,

    #[error("weights must be positive and sum to 1, got sum {sum}")]
    BadWeights { sum: f64 },

    #[error("split coefficients do not resolve the measurement, residual {residual:.3e}")]
    SplitInconsistent { residual: f64 },

    #[error("split coefficients are not normalized, residual {residual:.3e}")]
    SplitNotNormalized { residual: f64 },

    #[error("cannot shrink ancilla from {from} to {to}")]
    ShrinkingAncilla { from: usize, to: usize },

    #[error("coefficient {index} lies outside the subalgebra, residual {residual:.3e}")]
    NotInAlgebra { index: usize, residual: f64 },

    #[error("direction is not a usable witness direction: {reason}")]
    DegenerateDirection { reason: String },

    #[error("not a projection-valued measurement")]
    NotPvm,

    #[error("operator is not in the commutant, residual {residual:.3e}")]
    NotInCommutant { residual: f64 },

    #[error("operator is not a contraction, norm {norm}")]
    NotContraction { norm: f64 },

    #[error("operator does not leave the measurement invariant (not in L_M)")]
    NotInLm,

    #[error("dilation lift failed numerically: {reason}")]
    LiftFailed { reason: String },

    #[error("sampled weight is zero; the compressed tester is undefined")]
    ZeroWeight,

    #[error("decomposition does not sum back to the tester, residual {residual:.3e}")]
    DecompositionMismatch { residual: f64 },

    #[error("internal consistency check failed in {context}, residual {residual:.3e}")]
    Numeric { context: &'static str, residual: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("dimension {found} exceeds the configured limit {limit}")]
    DimensionLimit { found: usize, limit: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for parse problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) => 2,
            _ => 1,
        }
    }
}
