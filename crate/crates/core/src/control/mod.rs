//! Reduced cost, adjoint gradients and projected-gradient optimization.

mod cost;
mod mollify;
mod optimize;

pub use cost::{
    project_admissible, reduced_cost, reduced_gradient, vi_residual, AdmissibleSet, CostSpec,
};
pub use mollify::{mollify, optimize_regularized, MollifierSpec};
pub use optimize::{optimize, OptConfig, OptRecord, OptimizationTrace, Termination};

pub(crate) use cost::converged_state as converged_state_pub;
