use thiserror::Error;

use crate::model::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {}", format_violations(.0))]
    InvalidConfig(Vec<Violation>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state became non-finite: {0}")]
    NonFiniteState(String),

    #[error("process is not stochastically decaying: log-drift a = {0} >= 0")]
    NotDecaying(f64),

    #[error("birth intensity overflow: expected {expected} births exceeds cap {cap}")]
    IntensityOverflow { expected: f64, cap: f64 },

    #[error("mean lifespan is infinite for log-drift a = {0} >= 0")]
    InfiniteMean(f64),

    #[error("population explosion: {live} live firms exceeds cap {cap}")]
    PopulationExplosion { live: usize, cap: usize },

    #[error("no stationary tail: {0}")]
    NoStationaryTail(String),

    #[error("no stationary regime: {0}")]
    NoStationaryRegime(String),

    #[error("density not integrable near zero: {0}")]
    NotIntegrable(String),

    #[error("discretized operator is singular: {0}")]
    SingularSystem(String),

    #[error(
        "grid too coarse: refinement changed the solution by {diff:.3e} (tolerance {tol:.1e})"
    )]
    GridTooCoarse { diff: f64, tol: f64 },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("unsupported model variant: {0}")]
    Unsupported(String),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
