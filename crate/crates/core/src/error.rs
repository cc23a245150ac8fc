use std::fmt;
use std::path::PathBuf;

/// Machine-readable reason attached to a [`Error::Domain`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainReason {
    /// `n < 2`.
    DimensionTooSmall,
    /// `p <= 1`.
    PNotAboveOne,
    /// `q <= p`.
    QNotAboveP,
    /// `q >= p*`.
    QNotBelowCritical,
    /// `a <= p - n`.
    ANotAboveHardy,
    /// A special-function argument was not strictly positive.
    NonPositiveArgument,
    /// `(s, t)` outside `0 < s + n < t * gamma`.
    PhiWindow,
    /// The test-direction exponent is outside the summability window.
    BetaWindow,
    /// A non-finite or otherwise malformed input.
    InvalidInput,
}

impl DomainReason {
    pub fn code(self) -> &'static str {
        match self {
            DomainReason::DimensionTooSmall => "n_lt_2",
            DomainReason::PNotAboveOne => "p_le_1",
            DomainReason::QNotAboveP => "q_le_p",
            DomainReason::QNotBelowCritical => "q_ge_pstar",
            DomainReason::ANotAboveHardy => "a_le_p_minus_n",
            DomainReason::NonPositiveArgument => "nonpositive_argument",
            DomainReason::PhiWindow => "phi_window",
            DomainReason::BetaWindow => "beta_window",
            DomainReason::InvalidInput => "invalid_input",
        }
    }
}

impl fmt::Display for DomainReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error [{reason}]: {detail}")]
    Domain { reason: DomainReason, detail: String },

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("integration window too small: {0}")]
    Tail(String),

    #[error("grid inadequate: {0}")]
    Grid(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn domain(reason: DomainReason, detail: impl Into<String>) -> Self {
        Error::Domain {
            reason,
            detail: detail.into(),
        }
    }

    /// The domain reason, if this is a domain error.
    pub fn reason(&self) -> Option<DomainReason> {
        match self {
            Error::Domain { reason, .. } => Some(*reason),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
