use thiserror::Error;

/// Errors produced by the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A polynomial coefficient list did not start with 1.
    #[error("coefficient list must be monic (leading coefficient 1), got {0}")]
    NonMonic(f64),

    /// A model or coefficient list was structurally invalid.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// The model denominator has a root on or outside the unit circle.
    #[error("unstable denominator: pole modulus {modulus} >= 1 (pass force to override)")]
    Unstable { modulus: f64 },

    /// Bad noise configuration (variance, sample count).
    #[error("invalid noise config: {0}")]
    InvalidNoise(String),

    /// A non-finite sample was offered to the crossing counter.
    #[error("non-finite sample rejected")]
    NonFiniteSample,

    /// Forgetting factor outside [0, 1].
    #[error("forgetting factor must lie in [0, 1], got {0}")]
    InvalidLambda(f64),

    /// An inter-crossing period below one sample.
    #[error("crossing period must be >= 1 sample, got {0}")]
    InvalidPeriod(f64),

    /// Two crossing states cannot be combined.
    #[error("state configuration mismatch: {0}")]
    ConfigMismatch(String),

    /// A persisted state file failed validation.
    #[error("corrupt state file: {0}")]
    CorruptState(String),

    /// The autocorrelation sequence does not extend far enough.
    #[error("need autocorrelation lags through {needed}, only {available} available")]
    InsufficientLags { needed: usize, available: usize },

    /// A normalized crossing rate outside [0, 1].
    #[error("normalized crossing rate must lie in [0, 1], got {0}")]
    InvalidRate(f64),

    /// A crossing level without enough samples to normalize.
    #[error("crossing level {0} has fewer than 2 samples and no valid rate")]
    InvalidLevel(usize),

    /// The inverse crossing map was fed a sequence that is not a valid ACF.
    #[error("inconsistent autocorrelation sequence: cosine ratio {ratio} outside [-1, 1]")]
    InconsistentAcf { ratio: f64 },

    /// Sample series too short for the requested operation.
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    /// A constant series has no autocorrelation structure.
    #[error("series has zero sample variance")]
    ZeroVariance,

    /// The lag matrix is numerically unusable.
    #[error("ill-conditioned lag matrix: condition estimate {cond:.3e} exceeds 1e8")]
    IllConditioned { cond: f64 },

    /// Root finding did not converge within the iteration cap.
    #[error("root finding failed to converge within {iterations} iterations")]
    RootNonConvergence { iterations: usize },

    /// A zero discrete pole has no finite continuous-time image.
    #[error("discrete pole at the origin has no finite continuous image")]
    ZeroPole,

    /// Damping ratio undefined for this pole pair.
    #[error("damping undefined: real pole pair with non-positive product {product}")]
    UndefinedDamping { product: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
