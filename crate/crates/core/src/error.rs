use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("no users")]
    NoUsers,
    #[error("coincident points")]
    CoincidentPoints,
    #[error("invalid position: {0}")]
    InvalidPosition(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("RIS element {element} is assigned to {owners} users")]
    AssignmentOverlap { element: usize, owners: usize },
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("episode is done; call reset")]
    EpisodeDone,
    #[error("exhaustive search needs {combinations} combinations, budget is {budget}")]
    BudgetExceeded { combinations: u128, budget: u128 },
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn shape(what: impl Into<String>) -> Self {
        Error::ShapeMismatch(what.into())
    }
}
