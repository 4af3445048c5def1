//! Stochastic firm-size economies: Gibrat growth, birth flows, exits,
//! M&A, stationary densities and tail estimation.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod births;
pub mod error;
pub mod exits;
pub mod gbm;
pub mod ma;
pub mod model;
pub mod sim;
pub mod tail;

pub use analytics::{
    gbm_steady_state, solve_stationary, tail_exponent, DensitySolution, GibratSteadyState,
    GridConfig, PowerLawFit,
};
pub use births::BirthSchedule;
pub use error::{Error, Result};
pub use exits::{LifespanCause, LifespanRecord};
pub use gbm::PathSample;
pub use ma::{MAKernel, MaEvent, MergerKind, SpinoffKind};
pub use model::{
    derive_stream, validate, BirthKind, BirthLaw, DiffusionSpec, EconomyConfig, EntrySizeLaw,
    ExitCause, ExitLaw, Firm, GibratParams, Hazard, Omega, Population, RateFn, RngStream, SizeFn,
    SnapshotPlan, Violation,
};
pub use sim::{
    run, run_ensemble, run_replica, FlowRecord, SimulationResult, SimulationSummary, Snapshot,
};
pub use tail::{TailFit, TailMethod};
