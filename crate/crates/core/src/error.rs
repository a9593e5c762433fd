use thiserror::Error;

use crate::spectral::ResonanceRelation;

/// Failure modes of the library operations.
///
/// Domain outcomes (resonance, obstruction) are errors here; soft
/// conditions such as ill-conditioning are reported as warnings on the
/// returned reports instead.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },

    /// `component` is 1-based, like the variable names.
    #[error("component {component} has a nonzero constant term; a germ must fix the origin")]
    NonGerm { component: usize },

    #[error("linear part is singular (|det| = {determinant:e})")]
    SingularLinearPart { determinant: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("QR iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("not a contraction: max |eigenvalue| = {max_modulus}")]
    NotContraction { max_modulus: f64 },

    #[error("linear part is not diagonal (max off-diagonal modulus {off_diagonal:e})")]
    NotDiagonal { off_diagonal: f64 },

    #[error("germ is resonant: {} relation(s) among eigenvalues", relations.len())]
    ResonantInput { relations: Vec<ResonanceRelation> },

    #[error("no equivariant connection: graded equation is singular and inconsistent at degree {degree}")]
    ResonanceObstruction { degree: usize, weight: (f64, f64), obstruction: f64 },

    #[error("cocycle is not invertible at the origin")]
    SingularCocycle,

    #[error("torsion requires rank {expected} (the base dimension), bundle has rank {found}")]
    RankMismatch { expected: usize, found: usize },

    #[error("connection is not flat: curvature residual {residual:e} exceeds {tolerance:e}")]
    NotFlat { residual: f64, tolerance: f64 },

    #[error("coframe is not closed: residual {residual:e} exceeds {tolerance:e}")]
    NotClosed { residual: f64, tolerance: f64 },

    #[error("Mall cohomology needs dimension at least 3, got {0}")]
    DimensionTooSmall(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn dims_mismatch(expected: impl ToString, found: impl ToString) -> Error {
    Error::DimensionMismatch { expected: expected.to_string(), found: found.to_string() }
}

/// Soft conditions attached to otherwise successful results.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// A divisor fell below `1e-10`; the result is numerically fragile.
    IllConditioned { small_divisor: f64 },
    /// A graded equation was singular but consistent; the singular directions were set to zero.
    ResonantButSolvable { degree: usize, directions: usize },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::IllConditioned { small_divisor } => write!(f, "ill-conditioned: small divisor {small_divisor:e}"),
            Warning::ResonantButSolvable { degree, directions } => {
                write!(f, "resonant but solvable at degree {degree} ({directions} singular directions set to zero)")
            }
        }
    }
}

/// Divisors below this trigger [`Warning::IllConditioned`].
pub const ILL_CONDITIONED: f64 = 1e-10;
