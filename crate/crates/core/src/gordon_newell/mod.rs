//! Exact steady-state analytics for state-independent policies.

pub mod explicit;
pub mod invariant;
pub mod network;
pub mod normalization;
pub mod summary;

pub use explicit::{
    delay_stationary_explicit, enumerate_states, product_form, state_count, stationary_distribution_explicit,
    stationary_from_spec, StationaryDistribution, DEFAULT_STATE_CAP,
};
pub use invariant::{gth, invariant_distribution};
pub use network::{routing_matrix, traffic_intensities, Network, NetworkSpec, Station};
pub use normalization::{buzen, buzen_normalization, normalization_log, normalization_with_links, Normalization};
pub use summary::{availabilities, elevated_objective, infinite_unit_summary, steady_state_summary, SteadyStateSummary};
