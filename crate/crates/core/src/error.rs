use core::fmt;

use crate::model::Regime;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Which parameter constraint a raw tuple violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// A probability-valued input was NaN or outside `[0, 1]`.
    OutOfUnitInterval(&'static str),
    /// `alpha + beta > 1`.
    TrendMassExceedsOne,
    /// `a + b > 1`.
    CouplingExceedsOne,
    /// `beta != 0` and `b > a`.
    CouplingExceedsOffset,
    /// `n0 + m0 == 0`.
    EmptyInitialPopulation,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::OutOfUnitInterval(name) => write!(f, "{name} must lie in [0, 1]"),
            Constraint::TrendMassExceedsOne => f.write_str("alpha + beta must not exceed 1"),
            Constraint::CouplingExceedsOne => f.write_str("a + b must not exceed 1"),
            Constraint::CouplingExceedsOffset => f.write_str("b must not exceed a when beta != 0"),
            Constraint::EmptyInitialPopulation => f.write_str("n0 + m0 must be at least 1"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    ConstraintViolation(Constraint),
    /// The operation is only defined in another regime.
    RegimeMismatch {
        expected: &'static str,
        found: Regime,
    },
    DomainError(&'static str),
    DegenerateSpectrum,
    /// Successive quadrature estimates still differed by `difference` at the node cap.
    QuadratureFailure {
        nodes: usize,
        difference: f64,
    },
    /// A request of `requested` units exceeded the configured `cap`.
    ResourceLimit {
        requested: u64,
        cap: u64,
    },
}

impl Error {
    /// Short machine-readable kind, used in CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ConstraintViolation(_) => "ConstraintViolation",
            Error::RegimeMismatch { .. } => "RegimeMismatch",
            Error::DomainError(_) => "DomainError",
            Error::DegenerateSpectrum => "DegenerateSpectrum",
            Error::QuadratureFailure { .. } => "QuadratureFailure",
            Error::ResourceLimit { .. } => "ResourceLimit",
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ConstraintViolation(c) => write!(f, "constraint violation: {c}"),
            Error::RegimeMismatch { expected, found } => {
                write!(f, "operation requires the {expected} regime, parameters are {found}")
            }
            Error::DomainError(msg) => write!(f, "domain error: {msg}"),
            Error::DegenerateSpectrum => f.write_str("replacement matrix has a repeated unit eigenvalue"),
            Error::QuadratureFailure { nodes, difference } => {
                write!(f, "quadrature did not converge: successive estimates differ by {difference:e} at {nodes} nodes")
            }
            Error::ResourceLimit { requested, cap } => {
                write!(f, "resource limit exceeded: requested {requested}, cap {cap}")
            }
        }
    }
}

impl From<Constraint> for Error {
    fn from(c: Constraint) -> Self {
        Error::ConstraintViolation(c)
    }
}

impl core::error::Error for Error {}
