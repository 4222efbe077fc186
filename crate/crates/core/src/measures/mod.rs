//! Gaussian measures `μ_s`, their `L²`-cutoff and energy-weighted
//! versions, and Monte Carlo experiments on their transport by the flows.

mod events;
mod invariance;
mod liouville;
mod sampling;
pub mod stats;
mod tail;
mod transport;
mod weights;

pub use events::{EventSpec, Part};
pub use invariance::{default_pairs, default_probes, invariance_meta_test, invariance_test, InvarianceConfig, Transform, Z_MAX};
pub use liouville::{divergence, liouville_check};
pub use sampling::{expected_norm_sq, gaussian_field, sample, Ensemble, GaussianSpec, MIN_ACCEPTANCE};
pub use tail::{chi_square_even_tail, tail_sanity};
pub use transport::{change_of_variable_test, lp_weight_convergence, measure_growth_experiment, TransportConfig};
pub use weights::{weight, WeightEvaluator, WeightReport};

#[cfg(test)]
mod tests;
