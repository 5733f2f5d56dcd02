//! Problem instances, value distributions and reward curves.

pub mod distribution;
pub mod instance;
pub mod json;
pub mod random;
pub mod reward;

pub use distribution::{price_to_quantile, quantile_to_price, ValueDistribution};
pub use instance::{validate_instance, Instance, MultiObjective, QuantilePolicy, Units};
pub use json::{instance_to_json, load_instance, parse_instance, save_instance, save_result, InstanceFile};
pub use random::{random_instance, random_instance_seeded, RandomInstanceConfig};
pub use reward::{
    check_concavity, marginal_reward, per_ride_reward, reward_curve, reward_curve_derivative, ConcavityReport,
    RewardKind,
};
