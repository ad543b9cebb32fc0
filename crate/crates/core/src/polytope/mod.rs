//! Exact convex polytopes in chart coordinates.

pub mod bitset;
pub mod dd;
pub mod halfspace;
pub mod incremental;
pub mod io;
pub mod sets;

pub use bitset::FacetSet;
pub use halfspace::{HPolytope, Halfspace, VPolytope};
pub use incremental::{tv_distance, CutOutcome, CutProvenance, Polytope};
pub use io::{read_polytope, write_polytope, PolytopeFile, POLYTOPE_FORMAT};
pub use sets::{joint_product_vertices, ns_chsh_polytope, ns_polytope, sv2_polytope, SvConvention, SvSource};

/// Vertices of a bounded H-polytope.
pub fn enumerate_vertices(h: &HPolytope) -> crate::Result<VPolytope> {
    Ok(Polytope::from_h(h)?.v_rep())
}
