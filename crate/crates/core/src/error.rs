use alloc::string::String;
use alloc::vec::Vec;

/// Broad class of a failure, used by front ends to choose an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Inputs or settings violate a documented precondition.
    Validation,
    /// A numerical procedure broke down on otherwise valid inputs.
    Numerical,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid restriction: {0}")]
    InvalidRestriction(String),
    #[error("invalid MCMC settings: {0}")]
    InvalidMcmcSettings(String),
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("coverage gap: {0}")]
    CoverageGap(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("series too short: need {needed} observations, got {got}")]
    SeriesTooShort { needed: usize, got: usize },
    #[error("non-positive level {value} at position {index}")]
    NonPositiveLevel { index: usize, value: f64 },
    #[error("zero variance: {0}")]
    ZeroVariance(String),
    #[error("no observations in month {year}-{month:02}")]
    EmptyMonth { year: i32, month: u32 },
    #[error("too few countries: need {needed}, got {got}")]
    InsufficientCountries { needed: usize, got: usize },
    #[error("draw count mismatch: {0}")]
    DrawMismatch(String),
    #[error("no posterior draws")]
    EmptyDraws,
    #[error("explosive VAR: companion spectral radius {0}")]
    ExplosiveVar(f64),
    #[error("singular regression: {0}")]
    SingularRegression(String),
    #[error("degenerate instrument panel: {0}")]
    DegeneratePanel(String),
    #[error("both signals are identically zero")]
    BothZero,
    #[error("singular posterior: {0}")]
    SingularPosterior(String),
    #[error("Kalman filter diverged at t = {0}")]
    FilterDivergence(usize),
    #[error("sampler stuck in restricted region (column {column}, acceptance {rate:e})")]
    StuckRegion { column: usize, rate: f64 },
    #[error("non-positive shape parameter {0}")]
    NonPositiveShape(f64),
    #[error("policy-rate impact response is zero")]
    ZeroImpact,
    #[error("benchmark response is zero at horizon {0}")]
    ZeroBenchmark(usize),
    #[error("perfect collinearity: {0}")]
    PerfectCollinearity(String),
    #[error("{} validation errors: {}", .0.len(), join_messages(.0))]
    Invalid(Vec<Error>),
}

fn join_messages(errors: &[Error]) -> String {
    let mut out = String::new();
    for (i, e) in errors.iter().enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        out.push_str(&alloc::format!("{e}"));
    }
    out
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::ExplosiveVar(_)
            | Error::SingularRegression(_)
            | Error::DegeneratePanel(_)
            | Error::BothZero
            | Error::SingularPosterior(_)
            | Error::FilterDivergence(_)
            | Error::StuckRegion { .. }
            | Error::NonPositiveShape(_)
            | Error::ZeroImpact
            | Error::ZeroBenchmark(_)
            | Error::PerfectCollinearity(_) => ErrorKind::Numerical,
            _ => ErrorKind::Validation,
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
