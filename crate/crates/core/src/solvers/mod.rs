//! State, linearized and adjoint solvers in stream-function form.

mod discrete;
mod linear;
mod state;

pub use discrete::{Advection, StreamOperators};
pub use linear::{
    solve_adjoint_discrete, solve_adjoint_pde, solve_linearized, AdjointMode, AdjointSolution,
    Linearization, LinearizedSolution,
};
pub use state::{solve_state, FluidSolver, IterationRecord, SolverConfig, StateSolution};
