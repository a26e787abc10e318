//! Smooth nonquadratic losses: generalized coordinate descent, Bregman Dykstra,
//! their lockstep equivalence check, and the parallel generalizations.

mod cd;
mod loss;
mod parallel;
mod project;
mod solve;

pub use cd::{
    general_cd, general_criterion, general_dykstra, theorem6_check, GeneralCdState, GeneralDykstraState,
};
pub use loss::{bregman_divergence, SmoothLoss, LOGISTIC_EPS};
pub use parallel::{
    consensus_coordinate, parallel_admm_cd_general, parallel_dykstra_cd_general, GeneralPadmmState,
    GeneralPdcdState, CONSENSUS_TOL,
};
pub use project::bregman_project;
pub use solve::{minimize_block, INNER_GRAD_TOL};
