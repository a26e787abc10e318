//! Convex sets, support-function penalties and the block update linking them.

mod block;
pub mod io;
mod penalty;
mod problem;
mod set;

pub use block::{block_update, residual_map, Block, INNER_GAP_TOL};
pub use penalty::{support_value, Penalty};
pub(crate) use penalty::soft_threshold;
pub use problem::{criterion, project, RegressionProblem};
pub use set::{ApproxProblem, ConvexSet, MEMBERSHIP_TOL};
