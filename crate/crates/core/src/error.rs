use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid variable `{name}`: {reason}")]
    InvalidVariable { name: String, reason: String },

    #[error("negative weight {weight} for assignment {assignment}")]
    NegativeWeight { assignment: String, weight: String },

    #[error("all weights are zero; cannot normalize")]
    ZeroMass,

    #[error("assignment {0} does not match the variable space")]
    BadAssignment(String),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("joints are defined over different variable spaces")]
    MismatchedSpaces,

    /// Evidence with zero probability. Kept distinct so callers can treat
    /// vanishing slices separately from malformed input.
    #[error("conditioning on zero-probability evidence {0}")]
    NullEvidence(String),

    #[error("not a normalized distribution: {0}")]
    NotNormalized(String),

    #[error("cannot parse probability `{0}`")]
    ParseProb(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("expected {expected} settings, got {got}")]
    SettingArity { expected: usize, got: usize },

    #[error("setting {setting} is outside the domain of wing {wing}")]
    SettingOutOfDomain { wing: usize, setting: String },

    #[error("unknown lambda label `{0}`")]
    UnknownLabel(String),

    #[error("acceptance cap exceeded: {accepted} of {requested} runs accepted after {draws} draws")]
    AcceptanceCapExceeded {
        requested: u64,
        accepted: u64,
        draws: u64,
    },

    #[error("empty sample: {0}")]
    EmptySample(String),

    #[error("serialization failed: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
