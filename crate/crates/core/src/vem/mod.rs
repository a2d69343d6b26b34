//! Lowest-order virtual element discretization of `−∇·𝒦∇u = f` with
//! dofi-dofi, D-recipe and reduced-basis stabilizations.

mod io;
mod local;
mod problem;
mod solver;

pub use io::{load_solution, parse_solution, save_solution, solution_to_text, SOLUTION_VERSION};
pub use local::{
    eval_linear, local_consistency, local_rhs, stab_dofi_dofi, stab_drecipe, stab_rb, Projector,
};
pub use problem::{DiffusionProblem, ExactFn, ScalarFn, K1, K2};
pub use solver::{
    assemble, assemble_and_solve, condition_estimate, interior_operator, local_vem, solution_condition,
    Fallback, GlobalSystem, LocalVem, SolveOptions, Stabilization, VemSolution, CONDITION_TOL,
    GLOBAL_RESIDUAL_TOL,
};

#[cfg(test)]
mod tests;
