//! Triangular P1 finite elements: meshes, dof layout, sparse assembly and
//! linear solves.

pub mod assembly;
pub mod cg;
pub mod layout;
pub mod loads;
pub mod mesh;
pub mod mesh_io;
pub mod phase;
pub mod sparse;

pub use assembly::{assemble_residual_and_tangent, element_z};
pub use cg::{pcg, CgInfo, CgOptions, LinearSolveFailure};
pub use layout::{Discretization, FieldLayout};
pub use loads::{assemble_loads, BodyForce, DirichletData, LoadCase, LoadError};
pub use mesh::{generate_rect_mesh, BoundaryEdge, EdgeTag, Mesh, MeshError, Side, Split, TagSpec, TagWindow};
pub use mesh_io::{load_mesh, parse_mesh, write_mesh, MeshIoError};
pub use phase::phase_matrices;
pub use sparse::CsrMatrix;
