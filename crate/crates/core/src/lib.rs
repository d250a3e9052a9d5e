//! Numerical bounds for two-encoder source coding of correlated finite
//! sources, plus a small-blocklength combinatorics lab.
//!
//! The crate has three layers:
//!
//! - [`prob`] and [`instance`]: dense finite-alphabet probability, information
//!   measures, and problem-instance ingestion.
//! - [`outer`], [`inner`], [`region`]: candidate distribution classes for the
//!   outer and inner rate-region bounds, scalarized multi-start solvers,
//!   region geometry, and the classical baselines (rate-distortion via
//!   alternating minimization, lossless corner rates).
//! - [`lab`]: exact enumeration of typical sets, distributed covers and codes
//!   at small blocklengths, and empirical audits of the structural lemmas the
//!   bounds rest on.

pub mod inner;
pub mod instance;
pub mod lab;
pub mod outer;
pub mod prob;
pub mod region;
pub mod solver;
pub mod sweep;

pub use instance::{load_instance, InstanceError, ProblemInstance};
pub use prob::{Alphabet, JointPmf, Kernel, ProbError, Tolerances};
pub use solver::SolverOptions;
