use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violates a domain invariant; `constraint` names it.
    #[error("invalid {name} = {value}: requires {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("time step too large for {what}: rate*dt = {rate_dt} exceeds {limit}")]
    StepTooLarge {
        what: &'static str,
        rate_dt: f64,
        limit: f64,
    },

    #[error("undefined: {0}")]
    Undefined(&'static str),

    #[error("Fock truncation leak {leak:e} at dimension {dim} in trajectory {trajectory}")]
    TruncationLeak { trajectory: u64, dim: usize, leak: f64 },

    #[error("start-channel jump probability {p} per step exceeds 1; reduce dt")]
    JumpProbability { p: f64 },

    #[error("state collapsed to zero norm")]
    ZeroNorm,

    #[error("no start events recorded; raise the offset amplitude or t_max")]
    NoStartEvents,

    #[error("tau grids differ")]
    GridMismatch,

    #[error("series too short: need {needed} samples, have {have}")]
    InsufficientData { needed: usize, have: usize },

    #[error("tail window is empty or has no samples")]
    EmptyTail,

    #[error("vanishing denominator: {0}")]
    VanishingDenominator(&'static str),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, value: f64, constraint: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            constraint,
        }
    }
}
