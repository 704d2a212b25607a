//! A laboratory for studying tabu search on the job-shop scheduling problem.
//!
//! The crate covers the full experimental loop: instance generation and
//! serialization ([`instance`]), semi-active schedule evaluation over the
//! disjunctive-graph model ([`schedule`]), critical-path move operators
//! ([`neighborhood`]), steepest-descent and random-walk baselines
//! ([`descent`]), a tabu-search solver with run-length instrumentation
//! ([`tabu`]), exact optima and complete optimal-set enumeration at desk
//! scale ([`exact`]), search-space measurements such as distances to the
//! optimal set ([`landscape`]), a one-dimensional Markov model of search
//! cost ([`markov`]), the statistical toolkit used to compare them
//! ([`stats`]), and canned experiment suites with reproducible artifacts
//! ([`experiments`]).
//!
//! Every stochastic routine takes an explicit seed or `Rng`, and batch
//! helpers derive one child seed per trial, so results are identical
//! whether the `parallel` feature (on by default) is enabled or not.

pub mod descent;
pub mod exact;
pub mod exec;
pub mod fixtures;
pub mod instance;
pub mod landscape;
pub mod markov;
pub mod neighborhood;
pub mod rng;
pub mod schedule;
pub mod stats;
pub mod tabu;

pub mod experiments;

pub use exact::{enumerate_optima, optimal_makespan, ExactBudget, OptimalSet};

pub use instance::{Instance, InstanceError};
pub use schedule::{evaluate, Orientation, PrecBits, ScheduleInfo};
