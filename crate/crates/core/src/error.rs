use thiserror::Error;

use crate::network::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid network: {}", join(.0))]
    InvalidNetwork(Vec<Violation>),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("unknown arc `{0}`")]
    UnknownArc(String),
    #[error("parameter {0} outside [0, 1]")]
    ParameterOutOfRange(f64),
    #[error("invalid hamiltonian on arc `{arc}`: {reason}")]
    InvalidHamiltonian { arc: String, reason: String },
    #[error("missing hamiltonian for arc `{0}`")]
    MissingHamiltonian(String),
    #[error("invalid flux limiter at vertex `{vertex}`: c_x = {value} < {floor}")]
    InvalidFlux { vertex: String, value: f64, floor: f64 },
    #[error("non-finite level {0}")]
    NonFiniteLevel(f64),
    #[error("level {level} is below the arc minimum {floor} on `{arc}`")]
    InfeasibleLevel { arc: String, level: f64, floor: f64 },
    #[error("negative cycle at level {0}: level is below the critical value")]
    NegativeCycle(f64),
    #[error("bracketing failed: {0}")]
    NonBracketing(String),
    #[error("invalid scheme parameters: {0}")]
    InvalidScheme(String),
    #[error("horizon {horizon} is not a multiple of the time step {dt}")]
    HorizonNotMultiple { horizon: f64, dt: f64 },
    #[error("instance too large for brute force: {0}")]
    InstanceTooLarge(String),
    #[error("trajectory was produced without backpointers")]
    MissingBackpointers,
    #[error("empty boundary set")]
    EmptyBoundary,
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("invalid initial datum: {0}")]
    InvalidDatum(String),
    #[error("grid function has {got} values, grid has {expected} nodes")]
    GridMismatch { expected: usize, got: usize },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("level {level} is not admissible for arc `{arc}` (needs level > {floor})")]
    NotAdmissible { arc: String, level: f64, floor: f64 },
}

impl Error {
    /// Numerical failures as opposed to malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NegativeCycle(_) | Error::NonBracketing(_) | Error::InstanceTooLarge(_)
        )
    }
}

fn join(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
