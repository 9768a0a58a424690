//! Per-bus subproblems of one ADMM iteration.

pub mod injection;
pub mod square;
pub mod voltage;
pub mod xblock;
pub mod ysystem;

pub use injection::{
    disk_case, disk_residual, project_injection_box, project_injection_disk, prox_injection,
    solve_disk_multiplier, DiskCase,
};
pub use square::{
    complete_square_x0, solve_x0_matrix, update_x0, HatConstants, ObservationWeights, Observed,
    X0Observations,
};
pub use voltage::solve_x1_voltage;
pub use xblock::{LineVars, XBlock};
pub use ysystem::{
    build_constraint_system, solve_equality_qp, solve_y_node, ConstraintSystem, FactoredSystem,
    LinkSpec, NodeContext, YLocal, YNodeSolver, YTargets,
};
