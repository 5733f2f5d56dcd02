//! Elevated flow relaxations and their solvers.

pub mod lp;
pub mod point;
pub mod programs;
pub mod separable;

pub use lp::{lp_solve, Constraint, LinearProgram, LpOptions, LpSolution, Sense};
pub use point::{golden_section, origin_distributions, solve_point_pricing};
pub use programs::{
    epsilon_m, solve, solve_efr, solve_efr_matching, solve_efr_multiobjective, solve_efr_rate_limited,
    solve_efr_supply_redirection, solve_noprice_rate_limited, solve_noprice_redirection, RelaxSolution, Variant,
};
pub use separable::{
    concave_separable_maximize, maximize_concave_1d, Curve, LinearVar, Row, SeparableProgram, SeparableSolution,
    SolverConfig, SolverStats, Term, Var,
};
