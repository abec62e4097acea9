//! Linear and mixed-integer programming used by the building optimiser.

mod milp;
mod simplex;

pub use milp::{Binary, BranchOptions, MilpError, MilpProblem, MilpSolution};
pub use simplex::{solve_with_bounds, Constraint, LinearProgram, LpError, LpSolution, Relation};
