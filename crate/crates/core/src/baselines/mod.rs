//! Comparison bounds: min-entropy estimators with Azuma–Hoeffding
//! concentration, and amplification against non-signalling adversaries.

pub mod azuma;
pub mod ra;

pub use azuma::{azuma_bound, azuma_estimator, azuma_total, AzumaBound, DualEstimator};
pub use ra::{ra_ns_bound, RaBound, RaParams};
