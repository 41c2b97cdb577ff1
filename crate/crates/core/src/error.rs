use thiserror::Error;

/// Errors produced by field construction, map algebra and the geometric
/// scans. Variants carry enough context to be actionable from the CLI.
#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("field order {order} exceeds the table cap {cap}")]
    SizeCapExceeded { order: u128, cap: u64 },
    #[error("h and n must be positive (got h={h}, n={n})")]
    BadDegree { h: u32, n: u32 },
    #[error("operands belong to different field contexts")]
    CtxMismatch,
    #[error("no primitive polynomial found (internal search failure)")]
    NoPrimitivePolynomial,
    #[error("discrete log of zero is undefined")]
    DlogOfZero,
    #[error("inverse of zero is undefined")]
    DivisionByZero,
    #[error("subfield level {level} does not divide n={n}")]
    BadSubfieldLevel { level: u32, n: u32 },
    #[error("quadratic extension requires odd q (got p={0})")]
    EvenCharacteristic(u64),
    #[error("cannot parse field element {input:?}: {reason}")]
    ParseElement { input: String, reason: String },
    #[error("linear map is singular (kernel of F_q-dimension {kernel_dim})")]
    SingularMap { kernel_dim: u32 },
    #[error("value table is not F_q-linear (mismatch at element index {at})")]
    NonLinearTable { at: u64 },
    #[error("family constraint violated for {family}: {reason}")]
    FamilyConstraint { family: String, reason: String },
    #[error("spread set has a zero divisor at parameter ({x}, {y})")]
    ZeroDivisor { x: String, y: String },
    #[error("spread set is not normalized (identity matrix missing)")]
    NotNormalized,
    #[error("operation infeasible under current caps: {0}")]
    CapExceeded(String),
    #[error("spread map does not have the (x, y, f(y), g(x)) shape")]
    ShapeMismatch,
    #[error("linear set on the line is not scattered")]
    NotScattered,
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
