use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("observation is empty")]
    EmptyObservation,

    #[error("no spectral peak away from DC and Nyquist")]
    NoSpectralPeak,

    #[error("degenerate observation: phase is undefined")]
    DegenerateObservation,

    #[error("phase {0} lies outside [0, 2pi)")]
    PhaseOutOfRange(f64),

    #[error("index {index} out of range 1..={q}")]
    IndexOutOfRange { index: u32, q: u32 },

    #[error(
        "timeslot too short: slot {slot_s:e} s cannot hold a {observation_s:e} s beacon \
         plus {guard_s:e} s guard"
    )]
    SlotTooShort {
        slot_s: f64,
        observation_s: f64,
        guard_s: f64,
    },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("missing key component {0}")]
    MissingComponent(String),

    #[error("{test}: sequence of {got} bits is shorter than the minimum {min}")]
    SequenceTooShort {
        test: &'static str,
        min: usize,
        got: usize,
    },

    #[error("decoding failed: more errors than the code can correct")]
    DecodeFailure,

    #[error("key confirmation failed")]
    ConfirmationMismatch,

    #[error("requested {requested} output bits but only {available} are available")]
    OutputTooLong { requested: usize, available: usize },

    #[error("{got} trials are not enough, at least {min} required")]
    InsufficientTrials { min: usize, got: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
