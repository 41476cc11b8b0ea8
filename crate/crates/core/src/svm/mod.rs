//! RBF support vector machines: SMO solver, one-vs-one voting, grid search.

mod multiclass;
mod smo;

pub use multiclass::{grid_search, GridCell, GridResult, PairMachine, SvmGrid, SvmModel};
pub use smo::{
    dual_objective, gram_matrix, kkt_violation, rbf_kernel, solve, squared_distance, train_binary,
    BinaryFit, BinarySvm, SmoConfig, SmoSolution, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
