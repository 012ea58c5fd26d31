//! Crate-wide error type.
//!
//! Every fallible operation in this crate reports through [`Error`]. The
//! variants name the numerical failure mode rather than the call site, so a
//! caller can react to the condition (for example retry with a larger
//! velocity gap after [`Error::NotContracting`]) without string matching.

use thiserror::Error;

/// Convenience alias used by every fallible operation in this crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Numerical and configuration failure modes.
#[derive(Debug, Error)]
pub enum Error {
    /// A dense linear system was numerically singular. For scattering
    /// solves this signals an embedded eigenvalue of the hyperbolic block.
    #[error("singular linear system: {0}")]
    SingularSystem(String),

    /// An eigen-equation residual exceeded its tolerance.
    #[error("residual {residual:.3e} exceeds tolerance {tolerance:.3e} ({context})")]
    ResidualTooLarge {
        /// Measured relative residual.
        residual: f64,
        /// Tolerance the residual was checked against.
        tolerance: f64,
        /// Description of the quantity whose residual failed.
        context: String,
    },

    /// A plane-wave least-squares fit matrix was too ill-conditioned to trust.
    #[error("plane-wave fit ill-conditioned: cond = {cond:.3e}")]
    FitIllConditioned {
        /// Estimated condition number of the fit matrix.
        cond: f64,
    },

    /// A decaying eigenvector was found with eigenvalue inside an essential
    /// band (−∞, −ω] ∪ [ω, ∞).
    #[error("embedded eigenvalue {real:.6e}{imag:+.6e}i inside the essential band (omega = {omega})")]
    EmbeddedEigenvalue {
        /// Real part of the offending eigenvalue.
        real: f64,
        /// Imaginary part of the offending eigenvalue.
        imag: f64,
        /// Spectral parameter of the operator.
        omega: f64,
    },

    /// A retained discrete eigenvalue sits away from both the real and the
    /// imaginary axis, contradicting the assumed spectral structure.
    #[error("eigenvalue {real:.6e}{imag:+.6e}i is bounded away from both axes")]
    AxisViolation {
        /// Real part of the offending eigenvalue.
        real: f64,
        /// Imaginary part of the offending eigenvalue.
        imag: f64,
    },

    /// A small-k threshold fit did not resolve the classification.
    #[error("threshold fit inconclusive: relative fit residual {residual:.3e}")]
    InconclusiveFit {
        /// Relative residual of the attempted fit.
        residual: f64,
    },

    /// The Gram matrix of discrete modes was numerically singular.
    #[error("gram matrix singular or near-singular: cond = {cond:.3e}")]
    GramSingular {
        /// Estimated condition number of the Gram matrix.
        cond: f64,
    },

    /// A profile recursion attempted to divide by a transmission coefficient
    /// below the configured floor.
    #[error("transmission coefficient |s| = {value:.3e} below floor {floor:.3e} at k = {k}")]
    SmallTransmission {
        /// Magnitude of the offending transmission sample.
        value: f64,
        /// Configured minimum magnitude.
        floor: f64,
        /// Frequency at which the division was attempted.
        k: f64,
    },

    /// The L² norm of an evolved field drifted beyond the allowed band.
    #[error("evolution unstable: L2 ratio {ratio:.4} outside allowed band at t = {t}")]
    UnstableRun {
        /// Ratio of the current to the initial L² norm.
        ratio: f64,
        /// Time at which the violation was detected.
        t: f64,
    },

    /// The requested time step does not resolve the stiffest scale.
    #[error("time step {dt:.3e} exceeds stability bound {bound:.3e}")]
    CflViolation {
        /// Requested step.
        dt: f64,
        /// Maximum admissible step.
        bound: f64,
    },

    /// A driven remainder failed to decay at the expected exponential rate.
    #[error("remainder fails exponential decay: weighted sup grew to {ratio:.3}x its fitted level")]
    NoDecay {
        /// Ratio of the late-time weighted norm to the early-window fit.
        ratio: f64,
    },

    /// The Neumann fixed-point iteration is not contracting.
    #[error("fixed-point iteration not contracting: ratio {rho:.4} over {window} consecutive iterates")]
    NotContracting {
        /// Observed update-norm ratio.
        rho: f64,
        /// Number of consecutive iterates over which the ratio held.
        window: usize,
    },

    /// A completed decomposition failed its reconstruction check.
    #[error("decomposition residual {residual:.3e} exceeds {tolerance:.3e} x input norm")]
    DecompositionFailed {
        /// Relative reconstruction residual.
        residual: f64,
        /// Relative tolerance.
        tolerance: f64,
    },

    /// A fit was requested on fewer samples than its window requires.
    #[error("insufficient samples for fit: got {got}, need {need}")]
    InsufficientSamples {
        /// Number of usable samples.
        got: usize,
        /// Minimum number required.
        need: usize,
    },

    /// Invalid configuration or constructor argument.
    #[error("configuration error: {0}")]
    ConfigError(String),

    /// A field or table file failed structural validation.
    #[error("corrupt file: {0}")]
    CorruptFile(String),

    /// Underlying I/O failure (cache and field files).
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
