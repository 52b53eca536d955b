//! Facility location under Bernoulli demand with outsourcing recourse.
//!
//! A two-stage problem: open facilities and assign every customer to one of
//! them before demand is known, then react scenario by scenario when the
//! demand customers assigned to a facility exceed its service capacity.
//! Four recourse policies are supported:
//!
//! * **FO** — facility outsourcing: the facility serves all of its demand
//!   customers and buys the missing capacity at a per-unit penalty.
//! * **CD-CO** — cost-driven customer outsourcing: a cost-minimal subset is
//!   served, the rest go to a third party.
//! * **OD-CO** — order-driven customer outsourcing: customers are served
//!   first-come-first-served until the facility is full.
//! * **RO** — reassignment outsourcing: excess customers are rerouted to
//!   other open facilities with slack, or to an external source.
//!
//! The crate provides instance/scenario data types with JSON formats, a
//! benchmark instance generator, exact recourse evaluators, solver-neutral
//! MILP builders with MPS/LP export, a brute-force oracle and a
//! branch-and-bound solver, cross-policy comparison utilities, and an
//! experiment runner with CSV reports.
//!
//! All numeric code is generic over [`Scalar`] (any IEEE float); the aliases
//! below fix the `f64` instantiations used by the CLI and the file formats.

pub mod error;
pub mod experiment;
pub mod genbench;
pub mod instance;
pub mod milp;
pub mod normal;
pub mod recourse;
pub mod scalar;
pub mod scenario;
pub mod solve;
pub mod xeval;

mod flow;

pub use error::Error;
pub use instance::{FirstStageSolution, Instance};
pub use recourse::{Policy, PolicyEvaluation};
pub use scalar::Scalar;
pub use scenario::ScenarioSet;

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// `Instance` over the default `f64` scalar.
pub type InstanceF64 = Instance<f64>;
/// `ScenarioSet` over the default `f64` scalar.
pub type ScenarioSetF64 = ScenarioSet<f64>;
/// `PolicyEvaluation` over the default `f64` scalar.
pub type PolicyEvaluationF64 = PolicyEvaluation<f64>;
/// `MilpModel` over the default `f64` scalar.
pub type MilpModelF64 = milp::MilpModel<f64>;
/// `SolveResult` over the default `f64` scalar.
pub type SolveResultF64 = solve::SolveResult<f64>;
