//! Lattice discretisation of the flat unit torus: link fields, ∂̄ operators,
//! holomorphic sections, Chern curvature, the vortex residual, the metric
//! heat flow and a scalar Newton solver for abelian factors.

pub mod bundle;
pub mod examples;
pub mod flow;
pub mod newton;
pub mod residual;
pub mod sections;
pub mod spectral;
pub mod state;
pub mod torus;

pub use bundle::{degree_info, lattice_degree, DegreeInfo, LatticeBundle};
pub use residual::{chern_curvature, pointwise_residual, ResidualField};
pub use state::LatticePairState;
pub use torus::{build_torus, TorusLattice};
