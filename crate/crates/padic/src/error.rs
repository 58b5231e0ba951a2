use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("precision {requested} out of range (working precision {available})")]
    Precision { requested: u32, available: u32 },

    #[error("context mismatch: ({p_left}, {prec_left}) vs ({p_right}, {prec_right})")]
    ContextMismatch {
        p_left: u64,
        prec_left: u32,
        p_right: u64,
        prec_right: u32,
    },

    #[error("value is not a unit (valuation {valuation} > 0)")]
    NotAUnit { valuation: u32 },

    #[error("inexact division: valuation {valuation} < {needed}")]
    InexactDivision { valuation: u32, needed: u32 },

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("arity mismatch: function takes {expected} argument(s), got {got}")]
    Arity { expected: usize, got: usize },

    #[error("bitwise operations require p = 2, got p = {0}")]
    BitwiseRequiresP2(u64),

    #[error("scaled series value has valuation {valuation} < shift {shift}; function is not p^-{shift} times an integral series at this point")]
    NotInClassA { shift: u32, valuation: u32 },

    #[error("{op} requires a falling-factorial series function, got {found}")]
    NotSeriesClass { op: &'static str, found: String },

    #[error("state space of {needed} entries exceeds the configured limit {limit}")]
    ResourceLimit { needed: u64, limit: u64 },

    #[error("level {k} too small: need at least {min}")]
    LevelTooSmall { k: u32, min: u32 },

    #[error("map is not bijective modulo p^{level}")]
    NotBijective { level: u32 },

    #[error("sphere is not invariant at level {level}: residue {residue} maps outside")]
    SphereNotInvariant { level: u32, residue: u64 },

    #[error("criterion not applicable: {0}")]
    NotApplicable(String),

    #[error("zero denominator in coefficient {index}")]
    ZeroDenominator { index: usize },

    #[error("internal precision lift overflows the fast evaluation path")]
    LiftOverflow,

    #[error("generator config rejected: {0}")]
    ConfigRejected(String),
}

pub type Result<T> = std::result::Result<T, Error>;
