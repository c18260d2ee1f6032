use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("the k-donut needs k >= 3, got k = {0}")]
    InvalidK(usize),

    #[error("{what}: k = {k} exceeds the enumeration budget (k <= {max})")]
    BudgetExceeded { what: &'static str, k: usize, max: usize },

    /// A structural property that the construction guarantees did not hold.
    /// `claim` names the property; `choice` carries the sampler choice vector
    /// (when known) so the instance can be rebuilt.
    #[error("structure violation [{claim}]: {detail}")]
    Structure {
        claim: &'static str,
        detail: String,
        choice: Option<String>,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("max-entropy solve did not converge after {iterations} iterations (max residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
}

impl Error {
    pub(crate) fn structure(claim: &'static str, detail: impl Into<String>) -> Self {
        Error::Structure {
            claim,
            detail: detail.into(),
            choice: None,
        }
    }

    /// Attaches the choice vector of the offending 1-tree, if this is a
    /// structure violation that does not carry one yet.
    pub fn with_choice(self, bits: &str) -> Self {
        match self {
            Error::Structure {
                claim,
                detail,
                choice: None,
            } => Error::Structure {
                claim,
                detail,
                choice: Some(bits.to_string()),
            },
            other => other,
        }
    }

    pub fn is_structure_violation(&self) -> bool {
        matches!(self, Error::Structure { .. })
    }
}
