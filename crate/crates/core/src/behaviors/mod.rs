//! Scenarios, behavior vectors, generators and Bell functionals.

pub mod behavior;
pub mod born;
pub mod chart;
pub mod frequencies;
pub mod functional;
pub mod generators;
pub mod io;
pub mod regularize;
pub mod scenario;

pub use behavior::{ConditionalBehavior, JointBehavior, OutputMap, TrialLog};
pub use chart::{Chart, ChartKind};
pub use frequencies::{estimate_frequencies, estimate_frequencies_exact, sample_log};
pub use functional::{bell_value, bell_value_joint, Domain, Functional};
pub use generators::{make_hardy, make_mermin_ghz, make_tilted_chsh};
pub use regularize::regularize;
pub use scenario::Scenario;
