//! Device-independent randomness certification with refined polytopes.

pub mod baselines;
pub mod behaviors;
pub mod error;
pub mod io;
pub mod num;
pub mod pef;
pub mod polytope;
pub mod quantum;
pub mod refine;
pub mod rng;

pub use error::{Error, Result};
