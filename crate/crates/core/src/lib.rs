//! Selecting and scheduling two-stage jobs on `m` identical two-stage
//! flowshops to maximize profit while every flowshop finishes by time 1.
//!
//! * [`model`]: exact rationals, jobs, instances, solutions, normalization.
//! * [`johnson`]: Johnson's rule and the closed-form makespan.
//! * [`lp`]: exact bounded-variable simplex returning vertex solutions.
//! * [`ptas`]: the guess-and-round approximation schemes.
//! * [`oracle`]: exhaustive solvers used to certify the schemes.

pub mod johnson;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod ptas;

pub use model::{format_rational, normalize_instance, parse_rational, Instance, Job, JobId, Rational, Solution};
