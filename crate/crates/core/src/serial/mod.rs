//! Serial methods: Dykstra, alternating projections, Hildreth, block coordinate
//! descent, lasso coordinate descent and the lockstep equivalence checker.

mod cd;
mod dykstra;
mod trace;

pub use cd::{block_cd, equivalence_check, lasso_cd, lasso_cd_from, BlockCdState, LassoCdState};
pub use dykstra::{alternating_projections, dykstra, hildreth, DykstraState, HildrethState};
pub(crate) use trace::Recorder;
pub use trace::{RunOptions, Snapshots, SolverTrace, Status, StopRule, TraceConfig, TraceRecord};
