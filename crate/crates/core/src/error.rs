use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("malformed interval {interval}: {reason}")]
    InvalidInterval { interval: String, reason: String },

    #[error("point {x} is outside the domain {domain}")]
    Domain { x: String, domain: &'static str },

    #[error("branch {branch}: image {image} is not contained in (0,1)")]
    ImageOutsideUnit { branch: usize, image: String },

    #[error(
        "branches {first} and {second} have intersecting images {first_image} and {second_image}"
    )]
    OverlappingImages {
        first: usize,
        second: usize,
        first_image: String,
        second_image: String,
    },

    #[error("branch {branch}: derivative bound violated ({detail})")]
    NotContracting { branch: usize, detail: String },

    #[error("unsupported on the {backend} backend: {what}")]
    Backend {
        backend: crate::Backend,
        what: String,
    },

    #[error("invalid parameter point: {0}")]
    Parameters(String),

    #[error("invalid boundary assignment: {0}")]
    Assignment(String),

    #[error("`{0}` is unavailable for general (non-disjoint) systems")]
    GeneralMode(&'static str),

    #[error("quasi-partition construction failed: {0}")]
    QuasiPartition(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unknown preset `{name}`; available: {available}")]
    UnknownPreset { name: String, available: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),
}
