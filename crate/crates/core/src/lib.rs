//! Intervention-outcome simulation over evolutionary causal matrices.
//!
//! A population split into statuses is carried forward one timestep at a
//! time by a column-oriented transition-rate matrix chosen by an
//! intervention schedule. The crate provides the deterministic engine and a
//! Monte Carlo agent sampler ([`ecm`]), the schedule pattern language
//! ([`schedule`]), the statistics used to compare schedules ([`stats`]),
//! JSON model configs and trajectory CSV ([`io`]), and built-in
//! reproductions of four reference simulations ([`experiments`]).

pub mod ecm;
pub mod experiments;
pub mod schedule;
pub mod io;
pub mod stats;

pub use ecm::{EcmError, EcmMatrix, SimulationModel, StateVector, Trajectory};
pub use schedule::{parse_schedule, NamedSchedule, Schedule, ScheduleError};
