//! Independent oracles and reproducible demonstrations.

mod biregular;
mod brute;
mod certificate;
mod demos;
mod grid_search;
mod linear;
mod monotonicity;
mod suite;
mod tail;

pub use biregular::{build_biregular_graph, BiregularGraph, BIREGULAR_CAP};
pub use brute::{
    brute_force_stationary, generator, generator_stationary, state_dependent_generator, state_dependent_objective,
    state_dependent_stationary, BRUTE_FORCE_CAP,
};
pub use certificate::{
    approximation_certificate, CERTIFICATE_GAP, bicriteria_check, delay_bound_check, guarantee, ring_instance, symmetric_delay_instance, BicriteriaReport,
    CertificateReport, DelayBoundReport,
};
pub use demos::{
    expected_return_time, nonconcavity_demo, nonconcavity_instance, tightness_demo, tightness_instance, NonconcavityReport,
    TightnessReport,
};
pub use grid_search::{brute_force_state_dependent_opt, GridSearchResult, DEFAULT_BUDGET};
pub use linear::{generator_stationary_vector, solve_linear};
pub use monotonicity::{check_flow_monotonicity, MonotonicityReport};
pub use suite::{check_product_form, product_form_suite, ProductFormCheck, SuiteCase};
pub use tail::{poisson_tail_bound, poisson_tail_exact, tail_bound_violations};
