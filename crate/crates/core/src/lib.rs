//! Dykstra's algorithm, block coordinate descent and ADMM for best-approximation
//! and separably regularized regression problems.
//!
//! The crate is organised around the duality between the two problem types:
//!
//! * [`geometry`] holds convex sets, support-function penalties and the block
//!   update that links a penalized least-squares block to a Euclidean projection.
//! * [`serial`] contains cyclic Dykstra, alternating projections, Hildreth's
//!   method, block coordinate descent and the lockstep equivalence checker.
//! * [`parallel`] contains the product-space parallel methods (parallel Dykstra,
//!   parallel-Dykstra-CD, parallel-ADMM-CD), two-set ADMM and the inertial
//!   multi-block ADMM constructions.
//! * [`bregman`] generalizes all of the above to smooth nonquadratic losses.
//! * [`rates`] computes the asymptotic linear-rate constants for lasso coordinate
//!   descent and measures empirical contraction.
//! * [`harness`] provides certified reference solutions, instance generation,
//!   the experiment runner and SVG plotting.
//!
//! Block sweeps in the parallel solvers run on rayon when the `parallel` feature
//! is enabled (the default) and fall back to a sequential loop otherwise; see
//! [`exec`].

pub mod bregman;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod harness;
pub mod io_fmt;
pub mod numerics;
pub mod parallel;
pub mod rates;
pub mod serial;

pub use error::{Error, Result};
pub use exec::Execution;
pub use geometry::{ApproxProblem, Block, ConvexSet, Penalty, RegressionProblem};
pub use numerics::{Matrix, Vector};

pub use serial::{RunOptions, SolverTrace, StopRule};
