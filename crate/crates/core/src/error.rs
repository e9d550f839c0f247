use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

/// Every failure mode surfaced by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not an odd prime")]
    InvalidPrime(u64),
    #[error("operands carry different primes or precisions")]
    Mismatch,
    #[error("value vanishes to the working precision {precision} but is not known to be zero")]
    ImpreciseZero { precision: u32 },
    #[error("expected a p-adic unit")]
    NotAUnit,
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("working precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("exponent expression {0} is not integral")]
    NonIntegral(String),
    #[error("inadmissible matrix: the representability sign is +1")]
    Inadmissible,
    #[error("consistency violation: {0}")]
    ConsistencyViolation(String),
    #[error("enumeration needs about {estimated} congruence checks, budget is {budget}")]
    BudgetExceeded { estimated: BigInt, budget: u64 },
    #[error("no two consecutive equal densities up to level {t_max} (last value {last})")]
    NoStabilization { t_max: u32, last: BigRational },
    #[error("det M_beta has valuation {found}, expected {expected}")]
    InconsistentDeterminant { found: i64, expected: i64 },
    #[error("fixed locus has an unexpected shape: {0}")]
    ShapeViolation(String),
    #[error("ball radius {radius} is too small, need at least {needed}")]
    RadiusTooSmall { radius: u32, needed: u32 },
    #[error("search exhausted: {0}")]
    SearchExhausted(String),
    #[error("pair geometry contradicts the residue-character prediction: {0}")]
    GeometryViolation(String),
    #[error("line is not in the ambient difference divisor")]
    NotInAmbient,
    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),
    #[error("no case formula matches {0}")]
    NoCaseMatches(String),
}

pub type Result<T> = std::result::Result<T, Error>;
