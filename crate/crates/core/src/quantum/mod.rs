//! Outer relaxations of the quantum set.

pub mod moments;
pub mod npa;
pub mod sdp;

pub use moments::MomentStructure;
pub use npa::{max_linear, max_linear_coeffs, membership, nearest_quantum, LinearMax, Membership, Metric, Projection, MEMBERSHIP_TOL};
pub use sdp::{solve_sdp, ConicSolution, SdpProblem, SdpSettings, Status};
