//! Executable policies from relaxation solutions.

pub mod ext_real;
mod extract;
mod grid;
mod repair;

pub use ext_real::ExtReal;
pub use extract::{demand_circulation_check, prices_from_relaxation, CirculationReport, PricePolicy};
pub use grid::{round_to_discrete_grid, DiscreteGridReport};
pub use repair::{connectivity_repair, RepairReport};
