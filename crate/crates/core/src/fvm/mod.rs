//! Discretization of the coupled 3D / liner / electrode problem.

pub mod material;
pub mod mpfa;
pub mod system;

pub use material::MaterialField;
pub use mpfa::{assemble_subdomain, FaceBc, FluxOperator, SubdomainDiscretization};
pub use system::{assemble_system, Block, DiscreteSystem, DofMap};
