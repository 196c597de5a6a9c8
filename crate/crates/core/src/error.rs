use thiserror::Error;

/// Crate-wide error type. Display strings start with a stable kebab-case
/// tag so the CLI can emit machine-parsable one-line errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite-sample: {0}")]
    NonFiniteSample(String),

    #[error("grid-mismatch: {0}")]
    GridMismatch(String),

    #[error("domain-truncation: {0}")]
    DomainTruncation(String),

    #[error("unsupported-kernel: {0}")]
    UnsupportedKernel(String),

    #[error("kernel-domain: {0}")]
    KernelDomain(String),

    #[error("divergent-integral: {0}")]
    DivergentIntegral(String),

    #[error("scale-out-of-range: lambda = {lambda:e} outside [{lo:e}, {hi:e}]")]
    ScaleOutOfRange { lambda: f64, lo: f64, hi: f64 },

    #[error("fit-refused: {0}")]
    FitRefused(String),

    #[error("invalid-config: {0}")]
    InvalidConfig(String),

    #[error("config-not-found: {0}")]
    ConfigNotFound(String),

    #[error("experiment-refused: {0}")]
    ExperimentRefused(String),

    #[error("kernel-too-weak: {0}")]
    KernelTooWeak(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors caused by bad user input (configs, parameters,
    /// domains); the CLI maps these to exit code 1 and everything else
    /// (I/O, solver failures) to exit code 2.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteSample(_)
                | Error::GridMismatch(_)
                | Error::DomainTruncation(_)
                | Error::UnsupportedKernel(_)
                | Error::KernelDomain(_)
                | Error::ScaleOutOfRange { .. }
                | Error::FitRefused(_)
                | Error::InvalidConfig(_)
                | Error::ConfigNotFound(_)
                | Error::ExperimentRefused(_)
                | Error::Parse(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
