//! Stretched meshes and SUPG finite element assembly.

pub mod assemble;
pub mod mesh;

pub use assemble::{
    assemble_operator, assemble_operator_scaled, assemble_with, boundary_value, boundary_vectors, element_peclet,
    peclet_report, wind_field, DiscreteOperator,
};
pub use mesh::StretchedMesh;
