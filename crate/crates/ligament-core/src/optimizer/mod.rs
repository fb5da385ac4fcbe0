//! Level-set shape-optimization driver: transport of the implicit shape and
//! the two optimization workflows (descent with scheduled bar grafting, and
//! greedy bar insertion as an initialization stage).

mod driver;
mod transport;

pub use driver::{
    greedy_initial_phi, run_descent, run_greedy_init, shape_gradient, AugmentedLagrangian,
    CandidateSource, DescentProblem, EvalState, InsertedBar, IterEvent, IterationRecord,
    LigamentSchedule, OptimConfig, RunOutput, Termination,
};
pub use transport::{advect, insert_ligament, reinitialize, LevelSetOps, ReinitStatus};
